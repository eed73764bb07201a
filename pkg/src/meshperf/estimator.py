"""Per-flow throughput, loss and delay from a steady-state cycle (or fallback window)."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import TextIO

from .engine import Engine
from .model import NetworkSnapshot
from .steady import CycleStats, EstimationError, SteadyStateDetector

__all__ = [
    "FlowEstimate",
    "EstimateReport",
    "EstimationRun",
    "EstimationError",
    "compute_report",
    "run_estimation",
    "estimate",
]


@dataclass(frozen=True)
class FlowEstimate:
    flow_id: int
    throughput_kbps: float
    loss_pct: float
    delay_ms: float | None  # None when the flow delivered nothing in the window


@dataclass(frozen=True)
class EstimateReport:
    flows: tuple[FlowEstimate, ...]
    steady: bool
    cycle_length_us: int
    checkpoints_used: int = 0
    events_simulated: int = 0
    wall_time_ms: float = 0.0

    def flow(self, flow_id: int) -> FlowEstimate:
        for f in self.flows:
            if f.flow_id == flow_id:
                return f
        raise KeyError(flow_id)

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "flows": [
                {
                    "id": f.flow_id,
                    "throughput_kbps": round(f.throughput_kbps, 3),
                    "loss_pct": round(f.loss_pct, 3),
                    "delay_ms": None if f.delay_ms is None else round(f.delay_ms, 3),
                }
                for f in self.flows
            ],
            "steady": self.steady,
            "cycle_length_us": self.cycle_length_us,
            "events_simulated": self.events_simulated,
        }
        if include_timing:
            d["wall_time_ms"] = round(self.wall_time_ms, 3)
        return d

    def to_json(self, include_timing: bool = True) -> str:
        """Report JSON; reals carry 3 decimals. ``include_timing=False`` drops the
        only non-deterministic field, wall_time_ms."""
        return _dumps_3dp(self.to_dict(include_timing))


def _dumps_3dp(obj) -> str:
    # json would print 261.0 for 261.000; format reals explicitly.
    def enc(o):
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, float):
            return f"{o:.3f}"
        if isinstance(o, int):
            return str(o)
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, dict):
            return "{" + ", ".join(f"{json.dumps(k)}: {enc(v)}" for k, v in o.items()) + "}"
        if isinstance(o, (list, tuple)):
            return "[" + ", ".join(enc(v) for v in o) + "]"
        raise TypeError(type(o))

    return enc(obj)


def compute_report(cs: CycleStats, steady: bool, checkpoints_used: int = 0,
                   events_simulated: int = 0, wall_time_ms: float = 0.0) -> EstimateReport:
    if cs.length_us <= 0:
        raise EstimationError("window length must be positive")
    flows = []
    for fid in sorted(cs.flows):
        d = cs.flows[fid]
        if d.delivered == 0:
            flows.append(FlowEstimate(fid, 0.0, 100.0, None))
            continue
        thr = d.delivered_bits / cs.length_us * 1e3
        loss = 100.0 * d.dropped_total / d.generated if d.generated else 0.0
        flows.append(FlowEstimate(fid, thr, min(max(loss, 0.0), 100.0),
                                  d.sum_delay_us / d.delivered / 1000.0))
    return EstimateReport(tuple(flows), steady, cs.length_us, checkpoints_used,
                          events_simulated, wall_time_ms)


@dataclass
class EstimationRun:
    engine: Engine
    detector: SteadyStateDetector
    report: EstimateReport


def run_estimation(snapshot: NetworkSnapshot, trace: TextIO | None = None,
                   keep_states: bool = False) -> EstimationRun:
    """Simulate until a repeated checkpoint (or limits) and build the report.

    Raises EstimationError when the run stops before two checkpoints exist.
    """
    t0 = time.perf_counter()
    engine = Engine(snapshot, trace=trace)
    detector = SteadyStateDetector(engine, keep_states=keep_states)
    engine.run_until(detector)
    cs = detector.cycle_stats()
    used = (detector.match[1] - detector.match[0] + 1) if detector.match else len(detector.history)
    report = compute_report(cs, detector.steady, used, engine.state.events_processed,
                            (time.perf_counter() - t0) * 1e3)
    return EstimationRun(engine, detector, report)


def estimate(snapshot: NetworkSnapshot, trace: TextIO | None = None) -> EstimateReport:
    return run_estimation(snapshot, trace=trace).report
