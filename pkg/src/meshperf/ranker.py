"""Rank candidate route assignments by estimated performance and count
pairwise classification inversions against a reference ranking."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

from .estimator import EstimateReport, estimate
from .model import NetworkSnapshot
from .steady import EstimationError

METRICS = ("throughput", "loss", "delay")


@dataclass(frozen=True)
class Assignment:
    candidate_id: str
    paths: dict[int, tuple[int, ...]]  # flow_id -> chosen path

    def apply(self, base: NetworkSnapshot) -> NetworkSnapshot:
        return base.with_paths(self.paths)


@dataclass(frozen=True)
class Ranking:
    ids: tuple[str, ...]  # best first
    metric: str
    values: dict[str, float] = field(default_factory=dict)
    diagnostics: dict[str, str] = field(default_factory=dict)

    def to_list(self) -> list[dict]:
        return [{"candidate_id": cid, "metric_value": self.values.get(cid), "rank": i + 1}
                for i, cid in enumerate(self.ids)]


@dataclass(frozen=True)
class InversionReport:
    inverted_pairs: int
    total_pairs: int

    @property
    def inversion_pct(self) -> float:
        return 100.0 * self.inverted_pairs / self.total_pairs if self.total_pairs else 0.0

    def to_dict(self) -> dict:
        return {"inverted_pairs": self.inverted_pairs, "total_pairs": self.total_pairs,
                "inversion_pct": round(self.inversion_pct, 3)}


def flow_averaged(report: EstimateReport, metric: str) -> float:
    """Arithmetic mean over flows; a flow with no delay estimate counts as +inf delay."""
    if metric == "throughput":
        vals = [f.throughput_kbps for f in report.flows]
    elif metric == "loss":
        vals = [f.loss_pct for f in report.flows]
    elif metric == "delay":
        vals = [math.inf if f.delay_ms is None else f.delay_ms for f in report.flows]
    else:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return sum(vals) / len(vals)


def order_by_metric(ids: Sequence[str], values: dict[str, float], metric: str) -> tuple[str, ...]:
    """Best first; throughput descending, loss/delay ascending, ties by input order."""
    sign = -1.0 if metric == "throughput" else 1.0
    pos = {cid: i for i, cid in enumerate(ids)}
    return tuple(sorted(ids, key=lambda c: (sign * values[c], pos[c])))


def rank_candidates(base: NetworkSnapshot, candidates: Sequence[Assignment], metric: str,
                    estimator: Callable[[NetworkSnapshot], EstimateReport] = estimate) -> Ranking:
    if not candidates:
        raise ValueError("no candidates to rank")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    values: dict[str, float] = {}
    diags: dict[str, str] = {}
    failed = []
    for cand in candidates:
        try:
            values[cand.candidate_id] = flow_averaged(estimator(cand.apply(base)), metric)
        except (EstimationError, ValueError) as e:
            diags[cand.candidate_id] = str(e)
            failed.append(cand.candidate_id)
    ok = [c.candidate_id for c in candidates if c.candidate_id not in diags]
    ordered = order_by_metric(ok, values, metric) + tuple(failed)
    return Ranking(ordered, metric, values, diags)


def classification_inversions(predicted: Ranking | Sequence[str],
                              reference: Ranking | Sequence[str]) -> InversionReport:
    """Count unordered pairs whose relative order differs between the rankings."""
    p = tuple(predicted.ids if isinstance(predicted, Ranking) else predicted)
    r = tuple(reference.ids if isinstance(reference, Ranking) else reference)
    if set(p) != set(r) or len(p) != len(r) or len(set(p)) != len(p):
        only_p = sorted(set(p) - set(r))
        only_r = sorted(set(r) - set(p))
        raise ValueError(f"rankings differ: only in predicted {only_p}, only in reference {only_r}")
    pos = {cid: i for i, cid in enumerate(p)}
    inverted = sum(1 for a, b in combinations(r, 2) if pos[a] > pos[b])
    n = len(r)
    return InversionReport(inverted, n * (n - 1) // 2)


def subject_flow_candidates(flow_id: int, paths: Sequence[Sequence[int]]) -> list[Assignment]:
    """One assignment per candidate path of a single flow; other flows keep their paths."""
    return [Assignment(f"f{flow_id}p{i}", {flow_id: tuple(p)}) for i, p in enumerate(paths)]


def indexed_candidates(cands: dict[int, Sequence[Sequence[int]]]) -> list[Assignment]:
    """Assignment ``i`` routes every flow over its ``i``-th candidate (or its last one)."""
    k = max(len(v) for v in cands.values())
    return [Assignment(f"c{i}", {fid: tuple(ps[min(i, len(ps) - 1)]) for fid, ps in cands.items()})
            for i in range(k)]
