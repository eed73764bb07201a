"""Seeded stochastic reference simulator.

Same topology, flow, queue, lifetime and retry model as the deterministic
engine, but with random outcomes: each attempt draws a uniform backoff in
``[0, CW]`` slots (CW doubling per retry) and succeeds with probability ``p``.
Carrier sensing is perfect over the conflict graph, so there are no collision
losses. Ready nodes are served by smallest drawn backoff, then node id. A node
that loses to a newly granted conflicting transmission keeps its draw minus the
winner's (802.11 freeze-and-resume); a node deferring to an already ongoing
transmission keeps its draw unchanged.

Run ``r`` uses ``random.Random(base_seed + r)`` (Mersenne Twister). Metrics are
taken over ``[warmup, sim_duration]`` with the first 10% discarded.
"""
from __future__ import annotations

import math
import random
import statistics
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .interference import build_interference_graph
from .model import (
    NetworkSnapshot,
    attempt_overhead_us,
    contention_window,
    packet_interval_us,
    payload_airtime_us,
)

GENERATOR = "python-random-mt19937"
WARMUP_FRACTION = 0.1


@dataclass(frozen=True)
class OracleConfig:
    runs: int = 10
    base_seed: int = 0
    sim_duration_us: int = 10_000_000

    def __post_init__(self):
        if self.runs < 1 or self.sim_duration_us <= 0:
            raise ValueError("runs and sim_duration_us must be positive")


@dataclass
class RunResult:
    seed: int
    window_us: int
    # per flow (snapshot flow order) window deltas
    generated: list[int]
    delivered: list[int]
    dropped: list[int]
    sum_delay_us: list[int]
    delivered_bits: list[int]
    in_flight_start: list[int]
    in_flight_end: list[int]
    link_attempts: dict[tuple[int, int], int] = field(default_factory=dict)
    link_failures: dict[tuple[int, int], int] = field(default_factory=dict)

    def throughput_kbps(self, i: int) -> float:
        return self.delivered_bits[i] / self.window_us * 1e3

    def loss_pct(self, i: int) -> float:
        g = self.generated[i]
        return 100.0 * self.dropped[i] / g if g else 0.0

    def delay_ms(self, i: int) -> float | None:
        d = self.delivered[i]
        return self.sum_delay_us[i] / d / 1000.0 if d else None


@dataclass(frozen=True)
class MetricStats:
    mean: float | None
    stddev: float | None


@dataclass(frozen=True)
class OracleFlowStats:
    flow_id: int
    throughput_kbps: MetricStats
    loss_pct: MetricStats
    delay_ms: MetricStats


@dataclass
class OracleReport:
    flows: tuple[OracleFlowStats, ...]
    runs: int
    seeds: tuple[int, ...]
    sim_duration_us: int
    generator: str = GENERATOR
    run_results: list[RunResult] = field(default_factory=list, repr=False)

    def flow(self, flow_id: int) -> OracleFlowStats:
        for f in self.flows:
            if f.flow_id == flow_id:
                return f
        raise KeyError(flow_id)

    def to_dict(self) -> dict:
        def r3(x):
            return None if x is None else round(x, 3)

        return {
            "flows": [
                {
                    "id": f.flow_id,
                    "throughput_kbps": r3(f.throughput_kbps.mean),
                    "throughput_kbps_stddev": r3(f.throughput_kbps.stddev),
                    "loss_pct": r3(f.loss_pct.mean),
                    "loss_pct_stddev": r3(f.loss_pct.stddev),
                    "delay_ms": r3(f.delay_ms.mean),
                    "delay_ms_stddev": r3(f.delay_ms.stddev),
                }
                for f in self.flows
            ],
            "runs": self.runs,
            "seeds": list(self.seeds),
            "sim_duration_us": self.sim_duration_us,
            "generator": self.generator,
        }

    def to_json(self) -> str:
        from .estimator import _dumps_3dp

        return _dumps_3dp(self.to_dict())


def simulate_once(s: NetworkSnapshot, seed: int, sim_duration_us: int) -> RunResult:
    """One stochastic run; counters are differenced between warmup and the end."""
    rng = random.Random(seed)
    rand = rng.random
    randint = rng.randint
    mac = s.mac
    graph = build_interference_graph(s)
    link_idx = {k: i for i, k in enumerate(graph.links)}
    links = s.link_map()
    flows = list(s.flows)
    nf = len(flows)
    paths = [f.path for f in flows]
    hop_link = [[link_idx[h] for h in f.hops] for f in flows]
    hop_payload = [[payload_airtime_us(links[h].rate_bps, f.packet_size_bytes) for h in f.hops]
                   for f in flows]
    bits = [f.packet_bits for f in flows]
    prob = [links[k].delivery_prob for k in graph.links]
    intervals = [packet_interval_us(f) for f in flows]
    cw = [contention_window(mac, k) for k in range(mac.retry_limit)]
    overhead = attempt_overhead_us(mac)
    slot = mac.slot_us
    cap = mac.queue_capacity_pkts
    retry_limit = mac.retry_limit
    lifetime = mac.packet_lifetime_us
    conflicts = graph.conflict_sets
    senders = sorted({v for p in paths for v in p[:-1]})

    n = s.node_count
    queues = [deque() for _ in range(n)]
    txbuf: list[list | None] = [None] * n  # packet = [flow, gen_time, hop, attempts]
    backoff: list[int | None] = [None] * n
    active: dict[int, tuple[int, int, list]] = {}  # node -> (end, link, packet)
    next_gen = [0] * nf
    gen = [0] * nf
    dlv = [0] * nf
    drop = [0] * nf
    delay = [0] * nf
    dbits = [0] * nf
    l_att = [0] * len(graph.links)
    l_fail = [0] * len(graph.links)

    warmup = int(sim_duration_us * WARMUP_FRACTION)
    base = None

    def in_flight():
        out = [0] * nf
        for v in range(n):
            for pkt in queues[v]:
                out[pkt[0]] += 1
            if txbuf[v] is not None:
                out[txbuf[v][0]] += 1
        return out

    def enqueue(v, pkt, fi):
        q = queues[v]
        if len(q) >= cap:
            drop[fi] += 1
        else:
            q.append(pkt)

    while True:
        t = min(next_gen)
        for end, _, _ in active.values():
            if end < t:
                t = end
        if base is None and t > warmup:
            base = (gen[:], dlv[:], drop[:], delay[:], dbits[:], in_flight())
        if t > sim_duration_us:
            break
        # completions, ordered by flow then node
        done = sorted((pkt[0], v) for v, (end, _, pkt) in active.items() if end == t)
        for fi, v in done:
            _, li, pkt = active.pop(v)
            l_att[li] += 1
            if rand() >= prob[li]:
                l_fail[li] += 1
                pkt[3] += 1
                if pkt[3] >= retry_limit:
                    txbuf[v] = None
                    drop[fi] += 1
                continue
            txbuf[v] = None
            pkt[2] += 1
            pkt[3] = 0
            if pkt[2] == len(paths[fi]) - 1:
                dlv[fi] += 1
                dbits[fi] += bits[fi]
                delay[fi] += t - pkt[1]
            else:
                enqueue(paths[fi][pkt[2]], pkt, fi)
        for fi in range(nf):
            if next_gen[fi] == t:
                gen[fi] += 1
                enqueue(paths[fi][0], [fi, t, 0, 0], fi)
                next_gen[fi] = t + intervals[fi]
        # refill transmit buffers, then contend
        ready = []
        for v in senders:
            if txbuf[v] is None:
                q = queues[v]
                while q:
                    pkt = q.popleft()
                    if t - pkt[1] > lifetime:
                        drop[pkt[0]] += 1
                        continue
                    txbuf[v] = pkt
                    break
            pkt = txbuf[v]
            if pkt is not None and v not in active:
                if backoff[v] is None:
                    backoff[v] = randint(0, cw[pkt[3]])
                ready.append((backoff[v], v))
        if not ready:
            continue
        busy = set()
        for _, li, _ in active.values():
            busy |= conflicts[li]
        blocked = set(busy)
        winners = []  # (link, backoff) granted at this instant
        ready.sort()
        for bo, v in ready:
            pkt = txbuf[v]
            fi, hop = pkt[0], pkt[2]
            li = hop_link[fi][hop]
            if li in blocked:
                if li not in busy:
                    # counted down alongside the winner until it seized the medium
                    for wl, wbo in winners:
                        if li in conflicts[wl]:
                            backoff[v] = bo - wbo
                            break
                continue
            active[v] = (t + overhead + bo * slot + hop_payload[fi][hop], li, pkt)
            backoff[v] = None
            blocked |= conflicts[li]
            winners.append((li, bo))

    if base is None:
        base = ([0] * nf,) * 6
    b_gen, b_dlv, b_drop, b_delay, b_bits, b_flight = base
    return RunResult(
        seed=seed,
        window_us=sim_duration_us - warmup,
        generated=[a - b for a, b in zip(gen, b_gen)],
        delivered=[a - b for a, b in zip(dlv, b_dlv)],
        dropped=[a - b for a, b in zip(drop, b_drop)],
        sum_delay_us=[a - b for a, b in zip(delay, b_delay)],
        delivered_bits=[a - b for a, b in zip(dbits, b_bits)],
        in_flight_start=b_flight,
        in_flight_end=in_flight(),
        link_attempts={k: l_att[i] for i, k in enumerate(graph.links) if l_att[i]},
        link_failures={k: l_fail[i] for i, k in enumerate(graph.links) if l_att[i]},
    )


def _stats(values: list[float | None]) -> MetricStats:
    vals = [v for v in values if v is not None]
    if not vals:
        return MetricStats(None, None)
    mean = math.fsum(vals) / len(vals)
    return MetricStats(mean, statistics.stdev(vals) if len(vals) > 1 else 0.0)


def aggregate(s: NetworkSnapshot, cfg: OracleConfig, results: list[RunResult]) -> OracleReport:
    results = sorted(results, key=lambda r: r.seed)
    flows = []
    for i, f in enumerate(s.flows):
        flows.append(OracleFlowStats(
            f.flow_id,
            _stats([r.throughput_kbps(i) for r in results]),
            _stats([r.loss_pct(i) for r in results]),
            _stats([r.delay_ms(i) for r in results]),
        ))
    return OracleReport(tuple(sorted(flows, key=lambda f: f.flow_id)), cfg.runs,
                        tuple(r.seed for r in results), cfg.sim_duration_us,
                        run_results=results)


def _run_args(args):
    return simulate_once(*args)


def run_stochastic(s: NetworkSnapshot, cfg: OracleConfig = OracleConfig(),
                   workers: int = 1) -> OracleReport:
    """Run ``cfg.runs`` seeded replications and aggregate mean and sample stddev."""
    jobs = [(s, cfg.base_seed + r, cfg.sim_duration_us) for r in range(cfg.runs)]
    if workers > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_args, jobs))
    else:
        results = [simulate_once(*j) for j in jobs]
    return aggregate(s, cfg, results)
