"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 estimation stopped on its limits
without a usable window. Reports go to standard output (or ``--out``),
diagnostics to standard error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .estimator import _dumps_3dp, estimate
from .model import (
    SNAPSHOT_FORMAT_VERSION,
    SnapshotError,
    parse_snapshot,
    serialize_snapshot,
    validate_snapshot,
)
from .oracle import OracleConfig, run_stochastic
from .ranker import (
    METRICS,
    classification_inversions,
    indexed_candidates,
    rank_candidates,
    subject_flow_candidates,
)
from .scenario import (
    CBR_RATES,
    GridLayout,
    LinkModel,
    RandomLayout,
    ScenarioError,
    ScenarioSpec,
    gen_scenario,
)
from .steady import EstimationError

EXIT_OK, EXIT_INPUT, EXIT_LIMIT = 0, 2, 3


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def _read_json(path: str):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None


def _load_snapshot(path: str):
    snap = parse_snapshot(_read(path))
    for d in validate_snapshot(snap):
        print(d, file=sys.stderr)
    return snap


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def cmd_estimate(args) -> int:
    snap = _load_snapshot(args.snapshot)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as tr:
            report = estimate(snap, trace=tr)
    else:
        report = estimate(snap)
    _emit(report.to_json(), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    snap = _load_snapshot(args.snapshot)
    report = run_stochastic(snap, OracleConfig(args.runs, args.seed, args.duration_us))
    _emit(report.to_json(), args.out)
    return EXIT_OK


def compare_reports(est, orc) -> dict:
    rows = []
    for f in est.flows:
        o = orc.flow(f.flow_id)
        o_thr = o.throughput_kbps.mean
        rows.append({
            "id": f.flow_id,
            "estimate_throughput_kbps": round(f.throughput_kbps, 3),
            "oracle_throughput_kbps": None if o_thr is None else round(o_thr, 3),
            "throughput_ratio": round(f.throughput_kbps / o_thr, 3) if o_thr else None,
            "loss_delta_pct": round(f.loss_pct - o.loss_pct.mean, 3),
            "delay_delta_ms": (round(f.delay_ms - o.delay_ms.mean, 3)
                               if f.delay_ms is not None and o.delay_ms.mean is not None else None),
        })
    return {"flows": rows, "steady": est.steady, "runs": orc.runs, "seeds": list(orc.seeds)}


def format_table(cmp: dict) -> str:
    head = ("flow", "estimate kb/s", "oracle kb/s", "ratio", "d.loss %", "d.delay ms")
    lines = [head]
    for r in cmp["flows"]:
        lines.append(tuple("-" if v is None else (f"{v:.3f}" if isinstance(v, float) else str(v))
                           for v in (r["id"], r["estimate_throughput_kbps"],
                                     r["oracle_throughput_kbps"], r["throughput_ratio"],
                                     r["loss_delta_pct"], r["delay_delta_ms"])))
    widths = [max(len(row[i]) for row in lines) for i in range(len(head))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in lines)


def cmd_compare(args) -> int:
    snap = _load_snapshot(args.snapshot)
    est = estimate(snap)
    orc = run_stochastic(snap, OracleConfig(args.runs, args.seed))
    cmp = compare_reports(est, orc)
    print(_dumps_3dp(cmp))
    print(format_table(cmp), file=sys.stderr)
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.kind == "grid":
        layout = GridLayout(args.rows, args.cols, args.dx, args.dy)
        d_ref = args.d_ref or 120.0
    else:
        layout = RandomLayout(args.n, args.width, args.height)
        d_ref = args.d_ref or 90.0
    rates = tuple(int(r) for r in args.rates.split(",")) if args.rates else CBR_RATES
    spec = ScenarioSpec(layout, args.seed, LinkModel(d_ref_m=d_ref), args.flows, rates, args.k)
    snap, cands = gen_scenario(spec)
    _emit(serialize_snapshot(snap), args.out)
    side = args.candidates_out
    if side is None and args.out:
        side = str(Path(args.out).with_suffix(".candidates.json"))
    if side:
        Path(side).write_text(json.dumps({str(k): [list(p) for p in v] for k, v in cands.items()})
                              + "\n", encoding="utf-8")
    return EXIT_OK


def _load_candidates(path: str) -> dict[int, list[tuple[int, ...]]]:
    doc = _read_json(path)
    try:
        return {int(k): [tuple(int(v) for v in p) for p in paths] for k, paths in doc.items()}
    except (AttributeError, TypeError, ValueError):
        raise InputError(f"{path}: expected {{flow_id: [[node, ...], ...]}}") from None


def cmd_rank(args) -> int:
    snap = _load_snapshot(args.snapshot)
    cands = _load_candidates(args.candidates)
    if args.flow is not None:
        if args.flow not in cands:
            raise InputError(f"flow {args.flow} has no candidates")
        assignments = subject_flow_candidates(args.flow, cands[args.flow])
    else:
        assignments = indexed_candidates(cands)
    ranking = rank_candidates(snap, assignments, args.metric)
    for cid, msg in ranking.diagnostics.items():
        print(f"warning [{cid}]: {msg}", file=sys.stderr)
    _emit(_dumps_3dp(ranking.to_list()), args.out)
    return EXIT_OK


def _load_ranking(path: str) -> list[str]:
    doc = _read_json(path)
    if not isinstance(doc, list):
        raise InputError(f"{path}: expected a JSON array")
    if all(isinstance(x, dict) for x in doc):
        try:
            return [str(x["candidate_id"]) for x in sorted(doc, key=lambda x: x.get("rank", 0))]
        except KeyError:
            raise InputError(f"{path}: ranking entries need candidate_id") from None
    return [str(x) for x in doc]


def cmd_inversions(args) -> int:
    rep = classification_inversions(_load_ranking(args.predicted), _load_ranking(args.reference))
    _emit(_dumps_3dp(rep.to_dict()), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="meshperf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version",
                   version=f"meshperf {__version__} (snapshot format {SNAPSHOT_FORMAT_VERSION})")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="deterministic per-flow estimate")
    e.add_argument("--snapshot", required=True)
    e.add_argument("--trace", help="write the event trace here")
    e.add_argument("--out")
    e.set_defaults(func=cmd_estimate)

    o = sub.add_parser("oracle", help="seeded stochastic reference runs")
    o.add_argument("--snapshot", required=True)
    o.add_argument("--runs", type=int, default=10)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--duration-us", type=int, default=10_000_000)
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    c = sub.add_parser("compare", help="estimate vs oracle per-flow comparison")
    c.add_argument("--snapshot", required=True)
    c.add_argument("--runs", type=int, default=10)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_compare)

    g = sub.add_parser("gen", help="generate a scenario snapshot and candidate paths")
    g.add_argument("--kind", choices=("grid", "random"), required=True)
    g.add_argument("--rows", type=int, default=8)
    g.add_argument("--cols", type=int, default=7)
    g.add_argument("--dx", type=float, default=60.0)
    g.add_argument("--dy", type=float, default=70.0)
    g.add_argument("--n", type=int, default=30)
    g.add_argument("--width", type=float, default=100.0)
    g.add_argument("--height", type=float, default=100.0)
    g.add_argument("--d-ref", type=float, help="link model reference range (m)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--flows", type=int, default=3)
    g.add_argument("--rates", help="comma-separated rates in b/s")
    g.add_argument("--k", type=int, default=5)
    g.add_argument("--out")
    g.add_argument("--candidates-out")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("rank", help="rank candidate path assignments")
    r.add_argument("--snapshot", required=True)
    r.add_argument("--candidates", required=True)
    r.add_argument("--metric", choices=METRICS, default="throughput")
    r.add_argument("--flow", type=int, help="rank only this flow's candidates")
    r.add_argument("--out")
    r.set_defaults(func=cmd_rank)

    i = sub.add_parser("inversions", help="pairwise classification inversions")
    i.add_argument("--predicted", required=True)
    i.add_argument("--reference", required=True)
    i.add_argument("--out")
    i.set_defaults(func=cmd_inversions)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SnapshotError, InputError, ScenarioError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except EstimationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_LIMIT
