"""Desk-scale experiment inputs: grid/random topologies, synthetic link qualities,
k-best candidate paths and mixed-rate flow sets."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .model import Flow, Link, NetworkSnapshot, Node, MacParams, SimLimits, quantize_prob

#: Standard CBR rates (b/s).
CBR_RATES = (261_000, 485_000, 836_000)
DEFAULT_LINK_RATE = 18_000_000
MIN_LINK_PROB = 0.05


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class GridLayout:
    rows: int
    cols: int
    dx_m: float = 60.0
    dy_m: float = 70.0


@dataclass(frozen=True)
class RandomLayout:
    n: int
    width_m: float = 100.0
    height_m: float = 100.0


@dataclass(frozen=True)
class LinkModel:
    p_max: float = 0.99
    d_ref_m: float = 90.0
    alpha: float = 4.0

    def prob(self, d: float) -> float:
        return self.p_max * max(0.0, 1.0 - (d / self.d_ref_m) ** self.alpha)


@dataclass(frozen=True)
class ScenarioSpec:
    kind: GridLayout | RandomLayout
    seed: int = 0
    link_model: LinkModel = field(default_factory=LinkModel)
    flow_count: int = 3
    rate_mix: tuple[int, ...] = CBR_RATES
    candidates_k: int = 5
    packet_size_bytes: int = 1024
    link_rate_bps: int = DEFAULT_LINK_RATE


def random_indoor(seed: int, flow_count: int, n: int = 30, **kw) -> ScenarioSpec:
    """30 nodes in 100 x 100 m (indoor link curve, 90 m reference range)."""
    return ScenarioSpec(RandomLayout(n, 100.0, 100.0), seed, LinkModel(d_ref_m=90.0),
                        flow_count, **kw)


def grid_outdoor(seed: int, flow_count: int, rows: int = 8, cols: int = 7, **kw) -> ScenarioSpec:
    """8 x 7 grid at 60 m / 70 m spacing (outdoor link curve, 120 m reference range)."""
    return ScenarioSpec(GridLayout(rows, cols, 60.0, 70.0), seed, LinkModel(d_ref_m=120.0),
                        flow_count, **kw)


# --- topology --------------------------------------------------------------

def gen_topology(spec: ScenarioSpec) -> tuple[list[Node], list[Link]]:
    kind = spec.kind
    if isinstance(kind, GridLayout):
        if kind.rows <= 0 or kind.cols <= 0:
            raise ScenarioError("grid needs at least one row and column")
        # node id = row * cols + col, placed at (col * dx, row * dy)
        pos = [(c * kind.dx_m, r * kind.dy_m) for r in range(kind.rows) for c in range(kind.cols)]
    elif isinstance(kind, RandomLayout):
        if kind.n <= 0:
            raise ScenarioError("random topology needs at least one node")
        rng = np.random.default_rng(spec.seed)
        xy = rng.uniform((0.0, 0.0), (kind.width_m, kind.height_m), size=(kind.n, 2))
        pos = [(round(float(x), 3), round(float(y), 3)) for x, y in xy]
    else:
        raise ScenarioError(f"unknown layout {kind!r}")

    nodes = [Node(i, x, y) for i, (x, y) in enumerate(pos)]
    links = []
    for a in nodes:
        for b in nodes:
            if a.id == b.id:
                continue
            p = spec.link_model.prob(math.dist(a.position, b.position))
            if p >= MIN_LINK_PROB:
                links.append(Link(a.id, b.id, quantize_prob(p), spec.link_rate_bps))
    return nodes, links


# --- k best paths ----------------------------------------------------------

def link_etx(link: Link) -> Fraction:
    return Fraction(1000, link.prob_milli)


def path_etx(links: dict[tuple[int, int], Link], path: Iterable[int]) -> Fraction:
    path = tuple(path)
    return sum((link_etx(links[h]) for h in zip(path[:-1], path[1:])), Fraction(0))


def _best_path(adj, src, dst, banned_nodes, banned_edges):
    # Dijkstra under the total order (etx, hops, node sequence); that order is
    # preserved by extending two equal-length paths with the same edge.
    heap = [(Fraction(0), 0, (src,))]
    done = set()
    while heap:
        cost, hops, path = heapq.heappop(heap)
        v = path[-1]
        if v in done:
            continue
        done.add(v)
        if v == dst:
            return path
        for w, etx in adj.get(v, ()):
            if w in done or w in banned_nodes or (v, w) in banned_edges:
                continue
            heapq.heappush(heap, (cost + etx, hops + 1, path + (w,)))
    return None


def k_best_paths(links: Iterable[Link], src: int, dst: int, k: int | None) -> list[tuple[int, ...]]:
    """Up to ``k`` loopless paths ordered by ETX sum, then hop count, then node ids.

    Deviation-path (Yen) search; ``k=None`` returns every simple path.
    """
    if src == dst:
        raise ValueError("source and destination must differ")
    lmap = {l.key: l for l in links}
    adj: dict[int, list[tuple[int, Fraction]]] = {}
    for (a, b), l in sorted(lmap.items()):
        adj.setdefault(a, []).append((b, link_etx(l)))

    def key(p):
        return (path_etx(lmap, p), len(p) - 1, p)

    first = _best_path(adj, src, dst, frozenset(), frozenset())
    if first is None:
        return []
    found = [first]
    found_set = {first}
    candidates: list = []
    cand_set = set()
    while k is None or len(found) < k:
        prev = found[-1]
        for i in range(len(prev) - 1):
            root = prev[: i + 1]
            banned_edges = {(p[i], p[i + 1]) for p in found if p[: i + 1] == root}
            spur = _best_path(adj, prev[i], dst, set(root[:-1]), banned_edges)
            if spur is None:
                continue
            total = root[:-1] + spur
            if total not in found_set and total not in cand_set:
                cand_set.add(total)
                heapq.heappush(candidates, key(total))
        if not candidates:
            break
        *_, best = heapq.heappop(candidates)
        cand_set.discard(best)
        found.append(best)
        found_set.add(best)
    return found


# --- flows -----------------------------------------------------------------

def gen_flow_set(nodes: list[Node], links: list[Link], spec: ScenarioSpec,
                 max_draws: int | None = None) -> tuple[list[Flow], dict[int, list[tuple[int, ...]]]]:
    """Seeded random (src, dst) pairs with their k-best candidate paths.

    Flow ``i`` gets ``rate_mix[i % len(rate_mix)]`` and its best candidate as
    the default path. Returns the flows and ``{flow_id: candidates}``.
    """
    rng = np.random.default_rng([spec.seed, 1])
    n = len(nodes)
    if n < 2:
        raise ScenarioError("need at least two nodes for a flow")
    max_draws = max_draws or 200 * max(spec.flow_count, 1)
    pairs: list[tuple[int, int]] = []
    cands: dict[int, list[tuple[int, ...]]] = {}
    tried = set()
    for _ in range(max_draws):
        if len(pairs) == spec.flow_count:
            break
        s, d = (int(v) for v in rng.choice(n, size=2, replace=False))
        if (s, d) in tried:
            continue
        tried.add((s, d))
        paths = k_best_paths(links, s, d, spec.candidates_k)
        if paths:
            cands[len(pairs)] = paths
            pairs.append((s, d))
    if len(pairs) < spec.flow_count:
        raise ScenarioError(f"found only {len(pairs)} connected pairs of {spec.flow_count}")
    flows = [Flow(i, cands[i][0], spec.rate_mix[i % len(spec.rate_mix)], spec.packet_size_bytes)
             for i in range(spec.flow_count)]
    return flows, cands


def gen_scenario(spec: ScenarioSpec, mac: MacParams | None = None,
                 limits: SimLimits | None = None):
    """Snapshot plus per-flow candidate paths for ``spec``."""
    nodes, links = gen_topology(spec)
    flows, cands = gen_flow_set(nodes, links, spec)
    snap = NetworkSnapshot(tuple(nodes), tuple(links), tuple(flows),
                           mac or MacParams(), limits or SimLimits())
    return snap, cands
