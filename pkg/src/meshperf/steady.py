"""Steady-state cycle detection over canonical engine-state checkpoints.

A checkpoint is taken whenever every flow has delivered at least one packet
since the previous one. Checkpoints are compared by their canonical bytes; the
first repeat closes a steady-state cycle. When the run stops on its limits
without a repeat, the span between the first and last checkpoints is used
instead.

Canonical layout (signed 64-bit little-endian integers, in this order):

* per node, ascending id: queue length, then ``(flow_id, hop_index, attempts,
  age_us)`` per queued packet; a tx-buffer flag followed by the same four
  fields when occupied; backoff remaining
* number of ongoing transmissions, then ``(sender, link_index, flow_id,
  hop_index, remaining_us)`` per transmission, sorted by sender
* per flow, ascending flow id: time until next generation
* the medium-access priority list
* per link, in snapshot order: loss accumulator in thousandths

``age_us`` is ``now - gen_time``. Absolute clock, sequence numbers and counters
are left out so that recurring dynamics compare equal.
"""
from __future__ import annotations

import copy
import hashlib
import struct
from dataclasses import dataclass
from typing import Any

from .engine import Engine, EngineState, DELIVER


class EstimationError(RuntimeError):
    """No estimate can be produced (e.g. no complete checkpoint window)."""


@dataclass(frozen=True, eq=False)
class StateFingerprint:
    digest: bytes
    canonical_bytes: bytes

    @classmethod
    def of(cls, canonical: bytes) -> StateFingerprint:
        return cls(hashlib.blake2b(canonical, digest_size=16).digest(), canonical)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateFingerprint):
            return NotImplemented
        return self.canonical_bytes == other.canonical_bytes

    def __hash__(self) -> int:
        return hash(self.digest)


@dataclass(frozen=True)
class Checkpoint:
    fingerprint: StateFingerprint
    sim_time_us: int
    counters: tuple[tuple[int, ...], ...]  # per flow FlowCounters.as_tuple()
    state: Any = None  # full EngineState copy, only kept on request


@dataclass(frozen=True)
class FlowDelta:
    delivered: int
    delivered_bits: int
    generated: int
    dropped_total: int
    sum_delay_us: int


@dataclass(frozen=True)
class CycleStats:
    length_us: int
    flows: dict[int, FlowDelta]  # flow_id -> deltas over the window


def canonicalize(st: EngineState) -> bytes:
    now = st.now_us
    out: list[int] = []
    for ns in st.nodes:
        out.append(len(ns.queue))
        for p in ns.queue:
            out += (p.flow_id, p.hop_index, p.attempts, now - p.gen_time_us)
        p = ns.tx_buffer
        if p is None:
            out.append(0)
        else:
            out += (1, p.flow_id, p.hop_index, p.attempts, now - p.gen_time_us)
        out.append(ns.backoff_remaining_us)
    out.append(len(st.transmissions))
    for v in sorted(st.transmissions):
        tx = st.transmissions[v]
        out += (v, tx.link, tx.packet.flow_id, tx.packet.hop_index, tx.end_time_us - now)
    out += (g - now for g in st.next_gen_time_us)
    out += st.priority_list
    out += st.loss_acc
    return struct.pack(f"<{len(out)}q", *out)


def checkpoint_due(deliveries_since_last: list[int] | tuple[int, ...]) -> bool:
    return all(d >= 1 for d in deliveries_since_last)


def detect_cycle(history: list[Checkpoint], new: Checkpoint) -> int | None:
    """Index of the earlier checkpoint whose canonical state equals ``new``'s."""
    for i, cp in enumerate(history):
        if cp.fingerprint.digest == new.fingerprint.digest and cp.fingerprint == new.fingerprint:
            return i
    return None


def window_stats(first: Checkpoint, last: Checkpoint, flow_ids: list[int]) -> CycleStats:
    flows = {}
    for fid, a, b in zip(flow_ids, first.counters, last.counters):
        d = [y - x for x, y in zip(a, b)]
        gen, dlv, ovf, rty, life, delay, bits = d
        flows[fid] = FlowDelta(dlv, bits, gen, ovf + rty + life, delay)
    return CycleStats(last.sim_time_us - first.sim_time_us, flows)


def fallback_window(history: list[Checkpoint], flow_ids: list[int]) -> CycleStats:
    """Statistics between the first and last checkpoints of a run that hit its limits."""
    if len(history) < 2:
        raise EstimationError("no complete window: fewer than two checkpoints were reached")
    return window_stats(history[0], history[-1], flow_ids)


class SteadyStateDetector:
    """Halt predicate for :meth:`Engine.run_until` that records checkpoints.

    After the run, ``match`` holds ``(i, j)`` when checkpoint ``j`` repeated
    checkpoint ``i``; ``history`` holds every checkpoint taken.
    """

    def __init__(self, engine: Engine, max_checkpoints: int | None = None,
                 keep_states: bool = False):
        self.engine = engine
        self.max_checkpoints = max_checkpoints or engine.snapshot.limits.max_checkpoints
        self.keep_states = keep_states
        self.history: list[Checkpoint] = []
        self._seen: dict[bytes, int] = {}
        self._last_delivered = [0] * len(engine.flows)
        self.match: tuple[int, int] | None = None
        self.hit_checkpoint_limit = False

    @property
    def flow_ids(self) -> list[int]:
        return [f.flow_id for f in self.engine.flows]

    def take_checkpoint(self) -> Checkpoint:
        st = self.engine.state
        fp = StateFingerprint.of(canonicalize(st))
        return Checkpoint(fp, st.now_us, tuple(c.as_tuple() for c in st.counters),
                          copy.deepcopy(st) if self.keep_states else None)

    def __call__(self, engine: Engine, events: list) -> bool:
        if not any(ev[1] == DELIVER for ev in events):
            return False
        counters = engine.state.counters
        since = [c.delivered - last for c, last in zip(counters, self._last_delivered)]
        if not checkpoint_due(since):
            return False
        self._last_delivered = [c.delivered for c in counters]
        cp = self.take_checkpoint()
        # dict lookup hashes then compares the full bytes
        i = self._seen.get(cp.fingerprint.canonical_bytes)
        self.history.append(cp)
        if i is not None:
            self.match = (i, len(self.history) - 1)
            return True
        self._seen[cp.fingerprint.canonical_bytes] = len(self.history) - 1
        if len(self.history) >= self.max_checkpoints:
            self.hit_checkpoint_limit = True
            return True
        return False

    @property
    def steady(self) -> bool:
        return self.match is not None

    def cycle_stats(self) -> CycleStats:
        if self.match is not None:
            i, j = self.match
            return window_stats(self.history[i], self.history[j], self.flow_ids)
        return fallback_window(self.history, self.flow_ids)
