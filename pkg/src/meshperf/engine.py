"""Deterministic discrete-event core.

Packets are generated at each flow's CBR interval, contend for the medium over
the link conflict graph in round-robin priority order, and cross each hop with
a deterministic loss pattern given by a per-link error accumulator. Every time
is an integer number of microseconds, so a run is bit-reproducible.

Within one instant events are handled in a fixed order: transmission
completions (by flow id, then node), packet generations (by flow id), then
medium-access grants (priority-list order).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, TextIO

from .interference import InterferenceGraph, build_interference_graph
from .model import (
    PROB_SCALE,
    NetworkSnapshot,
    attempt_duration_us,
    packet_interval_us,
)

# event kinds
GEN = "gen"
DROP_OVERFLOW = "drop_overflow"
DROP_RETRY = "drop_retry"
DROP_LIFETIME = "drop_lifetime"
TX_START = "tx_start"
TX_OK = "tx_ok"
TX_FAIL = "tx_fail"
FORWARD = "forward"
DELIVER = "deliver"

# (time_us, kind, flow_id, seq, node, detail)
Event = tuple[int, str, int, int, int, str]


@dataclass(slots=True)
class VPacket:
    flow_id: int
    seq: int
    gen_time_us: int
    hop_index: int = 0
    attempts: int = 0
    hop_enqueue_time_us: int = 0


@dataclass(slots=True)
class NodeState:
    queue: deque = field(default_factory=deque)
    tx_buffer: VPacket | None = None
    # The deterministic engine folds the mean backoff into the attempt airtime,
    # so this stays 0 here; the oracle keeps its drawn backoff in it.
    backoff_remaining_us: int = 0


@dataclass(slots=True)
class Transmission:
    node: int
    link: int  # index into InterferenceGraph.links
    packet: VPacket
    end_time_us: int


@dataclass(slots=True)
class FlowCounters:
    generated: int = 0
    delivered: int = 0
    dropped_overflow: int = 0
    dropped_retry: int = 0
    dropped_lifetime: int = 0
    sum_delay_us: int = 0
    delivered_bits: int = 0

    @property
    def dropped_total(self) -> int:
        return self.dropped_overflow + self.dropped_retry + self.dropped_lifetime

    def as_tuple(self) -> tuple[int, ...]:
        return (self.generated, self.delivered, self.dropped_overflow, self.dropped_retry,
                self.dropped_lifetime, self.sum_delay_us, self.delivered_bits)


@dataclass
class EngineState:
    now_us: int
    nodes: list[NodeState]
    transmissions: dict[int, Transmission]  # sender node -> ongoing transmission
    next_gen_time_us: list[int]  # per flow, in flow order
    next_seq: list[int]
    priority_list: list[int]
    loss_acc: list[int]  # per link, in thousandths
    counters: list[FlowCounters]
    link_attempts: list[int]
    link_failures: list[int]
    pending_grant: bool = True
    events_processed: int = 0

    def in_flight(self, flow_id: int) -> int:
        n = 0
        for ns in self.nodes:
            n += sum(1 for p in ns.queue if p.flow_id == flow_id)
            if ns.tx_buffer is not None and ns.tx_buffer.flow_id == flow_id:
                n += 1
        return n


def transmit_attempt(delivery_prob_milli: int, acc_milli: int) -> tuple[bool, int]:
    """Deterministic Bernoulli stand-in: add the loss share 1 - p to the
    accumulator; the attempt fails exactly when it reaches 1."""
    acc = acc_milli + PROB_SCALE - delivery_prob_milli
    if acc >= PROB_SCALE:
        return False, acc - PROB_SCALE
    return True, acc


class Engine:
    """One deterministic simulation run over a snapshot.

    The engine owns a mutable :class:`EngineState`; ``step`` advances it by one
    event instant and returns the events handled there.
    """

    def __init__(self, snapshot: NetworkSnapshot, graph: InterferenceGraph | None = None,
                 trace: TextIO | None = None):
        self.snapshot = snapshot
        self.graph = graph or build_interference_graph(snapshot)
        self.trace = trace
        mac = snapshot.mac
        self.mac = mac
        self.flows = sorted(snapshot.flows, key=lambda f: f.flow_id)
        self.flow_index = {f.flow_id: i for i, f in enumerate(self.flows)}
        self.intervals = [packet_interval_us(f) for f in self.flows]
        link_idx = {k: i for i, k in enumerate(self.graph.links)}
        links = snapshot.link_map()
        self.link_prob_milli = [links[k].prob_milli for k in self.graph.links]
        # per flow, per hop: (link index, next node, airtime per retry)
        self.hop_link: list[list[int]] = []
        self.hop_airtime: list[list[list[int]]] = []
        for f in self.flows:
            li, air = [], []
            for hop in f.hops:
                li.append(link_idx[hop])
                air.append([attempt_duration_us(mac, links[hop].rate_bps, f.packet_size_bytes, k)
                            for k in range(mac.retry_limit)])
            self.hop_link.append(li)
            self.hop_airtime.append(air)
        self.senders = sorted({v for f in self.flows for v in f.path[:-1]})
        self.state = self.init()

    # -- construction -------------------------------------------------------

    def init(self) -> EngineState:
        """Fresh state at t=0 with the first packet of every flow queued at its source."""
        n = self.snapshot.node_count
        st = EngineState(
            now_us=0,
            nodes=[NodeState() for _ in range(n)],
            transmissions={},
            next_gen_time_us=list(self.intervals),
            next_seq=[1] * len(self.flows),
            priority_list=list(range(n)),
            loss_acc=[0] * len(self.graph.links),
            counters=[FlowCounters() for _ in self.flows],
            link_attempts=[0] * len(self.graph.links),
            link_failures=[0] * len(self.graph.links),
        )
        for f in self.flows:
            self._enqueue_new(st, f.flow_id, VPacket(f.flow_id, 0, 0), None)
        return st

    # -- event handlers -----------------------------------------------------

    def _emit(self, events: list, ev: Event) -> None:
        events.append(ev)
        if self.trace is not None:
            self.trace.write(format_event(ev) + "\n")

    def _enqueue_new(self, st: EngineState, flow_id: int, pkt: VPacket, events) -> None:
        fi = self.flow_index[flow_id]
        c = st.counters[fi]
        c.generated += 1
        src = self.flows[fi].source
        q = st.nodes[src].queue
        if events is not None:
            self._emit(events, (st.now_us, GEN, flow_id, pkt.seq, src, ""))
        if len(q) >= self.mac.queue_capacity_pkts:
            c.dropped_overflow += 1
            if events is not None:
                self._emit(events, (st.now_us, DROP_OVERFLOW, flow_id, pkt.seq, src, ""))
            return
        pkt.hop_enqueue_time_us = st.now_us
        q.append(pkt)

    def _complete(self, st: EngineState, tx: Transmission, events: list) -> None:
        t = st.now_us
        pkt = tx.packet
        fi = self.flow_index[pkt.flow_id]
        li = tx.link
        st.link_attempts[li] += 1
        ok, st.loss_acc[li] = transmit_attempt(self.link_prob_milli[li], st.loss_acc[li])
        node = st.nodes[tx.node]
        c = st.counters[fi]
        if not ok:
            st.link_failures[li] += 1
            pkt.attempts += 1
            self._emit(events, (t, TX_FAIL, pkt.flow_id, pkt.seq, tx.node, str(pkt.attempts)))
            if pkt.attempts >= self.mac.retry_limit:
                node.tx_buffer = None
                c.dropped_retry += 1
                self._emit(events, (t, DROP_RETRY, pkt.flow_id, pkt.seq, tx.node, ""))
            return
        node.tx_buffer = None
        self._emit(events, (t, TX_OK, pkt.flow_id, pkt.seq, tx.node, ""))
        pkt.hop_index += 1
        pkt.attempts = 0
        path = self.flows[fi].path
        nxt = path[pkt.hop_index]
        if pkt.hop_index == len(path) - 1:
            c.delivered += 1
            c.delivered_bits += self.flows[fi].packet_bits
            c.sum_delay_us += t - pkt.gen_time_us
            self._emit(events, (t, DELIVER, pkt.flow_id, pkt.seq, nxt, str(t - pkt.gen_time_us)))
            return
        q = st.nodes[nxt].queue
        if len(q) >= self.mac.queue_capacity_pkts:
            c.dropped_overflow += 1
            self._emit(events, (t, DROP_OVERFLOW, pkt.flow_id, pkt.seq, nxt, "relay"))
            return
        pkt.hop_enqueue_time_us = t
        q.append(pkt)
        self._emit(events, (t, FORWARD, pkt.flow_id, pkt.seq, nxt, ""))

    def _generate(self, st: EngineState, fi: int, events: list) -> None:
        f = self.flows[fi]
        seq = st.next_seq[fi]
        st.next_seq[fi] = seq + 1
        self._enqueue_new(st, f.flow_id, VPacket(f.flow_id, seq, st.now_us), events)
        st.next_gen_time_us[fi] += self.intervals[fi]

    def _fill_tx_buffers(self, st: EngineState, events: list) -> list[int]:
        t = st.now_us
        lifetime = self.mac.packet_lifetime_us
        filled = []
        for v in self.senders:
            ns = st.nodes[v]
            while ns.tx_buffer is None and ns.queue:
                pkt = ns.queue.popleft()
                if t - pkt.gen_time_us > lifetime:
                    st.counters[self.flow_index[pkt.flow_id]].dropped_lifetime += 1
                    self._emit(events, (t, DROP_LIFETIME, pkt.flow_id, pkt.seq, v, ""))
                    continue
                ns.tx_buffer = pkt
                filled.append(v)
        return filled

    def _arbitrate(self, st: EngineState, events: list, medium_freed: bool) -> None:
        filled = self._fill_tx_buffers(st, events)
        nodes, active = st.nodes, st.transmissions
        if medium_freed:
            waiting = [v for v in self.senders if nodes[v].tx_buffer is not None and v not in active]
        else:
            # nothing ended, so every node that was already waiting is still blocked
            waiting = filled
        if not waiting:
            return
        if len(waiting) > 1:
            waiting.sort(key=st.priority_list.index)
        t = st.now_us
        conflict_sets = self.graph.conflict_sets
        busy = [conflict_sets[tx.link] for tx in active.values()]
        for v in waiting:
            pkt = nodes[v].tx_buffer
            fi = self.flow_index[pkt.flow_id]
            li = self.hop_link[fi][pkt.hop_index]
            if any(li in cs for cs in busy):
                continue
            end = t + self.hop_airtime[fi][pkt.hop_index][pkt.attempts]
            active[v] = Transmission(v, li, pkt, end)
            busy.append(conflict_sets[li])
            st.priority_list.remove(v)
            st.priority_list.append(v)
            self._emit(events, (t, TX_START, pkt.flow_id, pkt.seq, v, str(end)))

    # -- public stepping ----------------------------------------------------

    def next_event_time(self) -> int:
        st = self.state
        if st.pending_grant:
            return st.now_us
        t = min(st.next_gen_time_us)
        for tx in st.transmissions.values():
            if tx.end_time_us < t:
                t = tx.end_time_us
        return t

    def step(self) -> list[Event]:
        """Advance to the next event instant and process everything due there."""
        st = self.state
        t = self.next_event_time()
        st.now_us = t
        st.pending_grant = False
        events: list[Event] = []
        done = [tx for tx in st.transmissions.values() if tx.end_time_us == t]
        if done:
            done.sort(key=lambda tx: (tx.packet.flow_id, tx.node))
            for tx in done:
                del st.transmissions[tx.node]
                self._complete(st, tx, events)
        for fi, due in enumerate(st.next_gen_time_us):
            if due == t:
                self._generate(st, fi, events)
        self._arbitrate(st, events, bool(done))
        st.events_processed += len(events)
        return events

    def limits_reached(self) -> bool:
        lim = self.snapshot.limits
        st = self.state
        return st.events_processed >= lim.max_events or st.now_us >= lim.max_sim_time_us

    def run_until(self, halt: Callable[[Engine, list[Event]], bool] | None = None) -> EngineState:
        """Step until ``halt(engine, events)`` is true or a SimLimits bound is hit."""
        while not self.limits_reached():
            events = self.step()
            if halt is not None and halt(self, events):
                break
        return self.state

    def run_for(self, duration_us: int) -> EngineState:
        """Step through every event instant up to and including now + duration."""
        end = self.state.now_us + duration_us
        while self.next_event_time() <= end:
            self.step()
        return self.state


def format_event(ev: Event) -> str:
    """Trace line: ``time_us kind flow seq node detail`` (detail may be '-')."""
    t, kind, flow, seq, node, detail = ev
    return f"{t} {kind} {flow} {seq} {node} {detail or '-'}"


def write_trace(events: Iterable[Event], out: TextIO) -> None:
    for ev in events:
        out.write(format_event(ev) + "\n")
