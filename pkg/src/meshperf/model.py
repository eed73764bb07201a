"""Input data model for the estimator: nodes, links, flows, MAC timing and run limits.

Snapshots are immutable value objects. ``parse_snapshot`` / ``serialize_snapshot``
convert to and from the JSON snapshot format; ``validate_snapshot`` returns a list
of diagnostics rather than raising.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Any

SNAPSHOT_FORMAT_VERSION = 1

#: Contention windows never grow past this many slots.
CW_CAP_SLOTS = 1023

#: Delivery probabilities are quantized to this many steps (3 decimals).
PROB_SCALE = 1000


class SnapshotError(ValueError):
    """Raised when a snapshot document cannot be parsed or fails validation."""

    def __init__(self, message: str, diagnostics: list[Diagnostic] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class SnapshotSyntaxError(SnapshotError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"syntax error at line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" | "warning"
    message: str
    entity: str = ""

    def __str__(self) -> str:
        where = f" [{self.entity}]" if self.entity else ""
        return f"{self.level}{where}: {self.message}"


@dataclass(frozen=True)
class Node:
    id: int
    x: float | None = None
    y: float | None = None

    @property
    def position(self) -> tuple[float, float] | None:
        if self.x is None or self.y is None:
            return None
        return (self.x, self.y)


@dataclass(frozen=True)
class Link:
    src: int
    dst: int
    delivery_prob: float
    rate_bps: int = 18_000_000

    @property
    def key(self) -> tuple[int, int]:
        return (self.src, self.dst)

    @property
    def prob_milli(self) -> int:
        """Delivery probability in thousandths (the engine's exact lattice)."""
        return int(round(self.delivery_prob * PROB_SCALE))


@dataclass(frozen=True)
class Flow:
    flow_id: int
    path: tuple[int, ...]
    rate_bps: int
    packet_size_bytes: int = 1024

    def __post_init__(self):
        object.__setattr__(self, "path", tuple(self.path))

    @property
    def source(self) -> int:
        return self.path[0]

    @property
    def destination(self) -> int:
        return self.path[-1]

    @property
    def hops(self) -> list[tuple[int, int]]:
        return list(zip(self.path[:-1], self.path[1:]))

    @property
    def packet_bits(self) -> int:
        return self.packet_size_bytes * 8


@dataclass(frozen=True)
class MacParams:
    """802.11g-like timing. All durations in integer microseconds."""

    slot_us: int = 9
    sifs_us: int = 10
    difs_us: int = 28
    phy_header_us: int = 20
    ack_us: int = 25
    cw_min_slots: int = 15
    retry_limit: int = 7
    queue_capacity_pkts: int = 10
    packet_lifetime_us: int = 1_000_000


@dataclass(frozen=True)
class SimLimits:
    max_events: int = 200_000
    max_sim_time_us: int = 1_000_000
    max_checkpoints: int = 4096


@dataclass(frozen=True)
class InterferenceSpec:
    mode: str = "two_hop"  # "two_hop" | "range"
    meters: float | None = None


@dataclass(frozen=True)
class NetworkSnapshot:
    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    flows: tuple[Flow, ...]
    mac: MacParams = field(default_factory=MacParams)
    limits: SimLimits = field(default_factory=SimLimits)
    interference: InterferenceSpec = field(default_factory=InterferenceSpec)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "flows", tuple(self.flows))

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def link_map(self) -> dict[tuple[int, int], Link]:
        return {l.key: l for l in self.links}

    def with_paths(self, paths: dict[int, tuple[int, ...]]) -> NetworkSnapshot:
        """Copy of this snapshot with some flows rerouted (flow_id -> path)."""
        flows = tuple(
            replace(f, path=tuple(paths[f.flow_id])) if f.flow_id in paths else f
            for f in self.flows
        )
        return replace(self, flows=flows)


# --- timing arithmetic -----------------------------------------------------

def packet_interval_us(flow: Flow) -> int:
    """Inter-generation time of a CBR flow, rounded half-to-even."""
    return round(Fraction(flow.packet_bits * 10**6, flow.rate_bps))


def contention_window(mac: MacParams, retry_index: int) -> int:
    """Contention window in slots for the given retry (0 = first attempt)."""
    return min((mac.cw_min_slots + 1) * 2**retry_index - 1, CW_CAP_SLOTS)


def mean_backoff_us(mac: MacParams, retry_index: int) -> int:
    return (contention_window(mac, retry_index) // 2) * mac.slot_us


def payload_airtime_us(link_rate_bps: int, packet_size_bytes: int) -> int:
    return -(-packet_size_bytes * 8 * 10**6 // link_rate_bps)


def attempt_overhead_us(mac: MacParams) -> int:
    """Fixed per-attempt airtime excluding backoff and payload."""
    return mac.difs_us + mac.phy_header_us + mac.sifs_us + mac.ack_us


def attempt_duration_us(mac: MacParams, link_rate_bps: int, packet_size_bytes: int,
                        retry_index: int) -> int:
    """Airtime of one deterministic attempt: DIFS, mean backoff, frame, SIFS, ACK."""
    if not 0 <= retry_index < mac.retry_limit:
        raise ValueError(f"retry_index {retry_index} outside [0, {mac.retry_limit})")
    return (attempt_overhead_us(mac) + mean_backoff_us(mac, retry_index)
            + payload_airtime_us(link_rate_bps, packet_size_bytes))


def quantize_prob(p: float) -> float:
    return round(p * PROB_SCALE) / PROB_SCALE


# --- validation ------------------------------------------------------------

def validate_snapshot(s: NetworkSnapshot) -> list[Diagnostic]:
    """Check all snapshot invariants. Errors and warnings are both returned."""
    out: list[Diagnostic] = []

    def err(msg, entity=""):
        out.append(Diagnostic("error", msg, entity))

    ids = [n.id for n in s.nodes]
    if sorted(ids) != list(range(len(ids))):
        err("node ids must be unique and dense in [0, node_count)", "nodes")
    node_ids = set(ids)
    for n in s.nodes:
        if n.position is not None and not all(math.isfinite(c) for c in n.position):
            err("position must be finite", f"node {n.id}")
        if (n.x is None) != (n.y is None):
            err("position needs both x and y", f"node {n.id}")

    seen_links = set()
    for l in s.links:
        ent = f"link {l.src}->{l.dst}"
        for end in (l.src, l.dst):
            if end not in node_ids:
                err(f"unknown node id {end}", ent)
        if l.src == l.dst:
            err("self-loop link", ent)
        if not 0 < l.delivery_prob <= 1 or l.prob_milli < 1:
            err(f"delivery probability {l.delivery_prob} outside (0, 1]", ent)
        if l.rate_bps <= 0:
            err(f"link rate {l.rate_bps} must be positive", ent)
        if l.key in seen_links:
            err("duplicate link", ent)
        seen_links.add(l.key)

    links = s.link_map()
    if not s.flows:
        err("at least one flow is required", "flows")
    flow_ids = set()
    for f in s.flows:
        ent = f"flow {f.flow_id}"
        if f.flow_id < 0:
            err("flow id must be non-negative", ent)
        if f.flow_id in flow_ids:
            err(f"duplicate flow id {f.flow_id}", ent)
        flow_ids.add(f.flow_id)
        if f.rate_bps <= 0:
            err(f"rate {f.rate_bps} must be positive", ent)
        if f.packet_size_bytes <= 0:
            err("packet size must be positive", ent)
        if len(f.path) < 2:
            err("path needs at least two nodes", ent)
        if len(set(f.path)) != len(f.path):
            err("path repeats a node", ent)
        bad_nodes = [v for v in f.path if v not in node_ids]
        for v in bad_nodes:
            err(f"path references unknown node {v}", ent)
        if bad_nodes:
            continue
        hop_links = []
        for hop in f.hops:
            if hop not in links:
                err(f"no link {hop[0]}->{hop[1]} on path", ent)
            else:
                hop_links.append(links[hop])
        if f.rate_bps > 0 and hop_links:
            bottleneck = min(l.rate_bps for l in hop_links)
            if f.rate_bps >= bottleneck:
                out.append(Diagnostic(
                    "warning",
                    f"rate {f.rate_bps} b/s >= bottleneck link rate {bottleneck} b/s",
                    ent))

    mac = s.mac
    for fl in fields(mac):
        if getattr(mac, fl.name) <= 0:
            err(f"{fl.name} must be positive", "mac")
    for fl in fields(s.limits):
        if getattr(s.limits, fl.name) <= 0:
            err(f"{fl.name} must be positive", "limits")

    itf = s.interference
    if itf.mode == "range":
        if itf.meters is None or not itf.meters > 0:
            err("range interference needs positive meters", "interference")
        if any(n.position is None for n in s.nodes):
            err("range interference needs every node position", "interference")
    elif itf.mode != "two_hop":
        err(f"unknown interference mode {itf.mode!r}", "interference")
    return out


def errors_only(diags: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.level == "error"]


# --- JSON snapshot format --------------------------------------------------

# document key -> MacParams field; "_us" suffixes are optional in documents
_MAC_DOC_KEYS = {
    "slot": "slot_us",
    "sifs": "sifs_us",
    "difs": "difs_us",
    "phy_header": "phy_header_us",
    "ack": "ack_us",
    "cw_min_slots": "cw_min_slots",
    "retry_limit": "retry_limit",
    "queue_capacity_pkts": "queue_capacity_pkts",
    "packet_lifetime": "packet_lifetime_us",
}
_MAC_KEYS = {**_MAC_DOC_KEYS, **{v: v for v in _MAC_DOC_KEYS.values()}}
_LIMIT_KEYS = {f.name for f in fields(SimLimits)}


def _require_int(value: Any, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SnapshotError(f"{what} must be an integer, got {value!r}")
    return value


def _check_keys(obj: Any, allowed: set[str], required: set[str], what: str) -> None:
    if not isinstance(obj, dict):
        raise SnapshotError(f"{what} must be an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise SnapshotError(f"unknown key(s) {unknown} in {what}")
    missing = sorted(required - set(obj))
    if missing:
        raise SnapshotError(f"missing key(s) {missing} in {what}")


def snapshot_from_dict(doc: dict) -> NetworkSnapshot:
    _check_keys(doc, {"nodes", "links", "flows", "mac", "limits", "interference"},
                {"nodes", "links", "flows"}, "snapshot")
    nodes = []
    for i, nd in enumerate(doc["nodes"]):
        _check_keys(nd, {"id", "x", "y"}, {"id"}, f"nodes[{i}]")
        x, y = nd.get("x"), nd.get("y")
        nodes.append(Node(_require_int(nd["id"], f"nodes[{i}].id"),
                          None if x is None else float(x),
                          None if y is None else float(y)))
    links = []
    for i, ld in enumerate(doc["links"]):
        _check_keys(ld, {"src", "dst", "p", "rate_bps"}, {"src", "dst", "p"}, f"links[{i}]")
        p = ld["p"]
        if isinstance(p, bool) or not isinstance(p, (int, float)):
            raise SnapshotError(f"links[{i}].p must be a number")
        links.append(Link(_require_int(ld["src"], f"links[{i}].src"),
                          _require_int(ld["dst"], f"links[{i}].dst"),
                          quantize_prob(float(p)),
                          _require_int(ld.get("rate_bps", 18_000_000), f"links[{i}].rate_bps")))
    flows = []
    for i, fd in enumerate(doc["flows"]):
        _check_keys(fd, {"id", "path", "rate_bps", "packet_size_bytes"},
                    {"id", "path", "rate_bps"}, f"flows[{i}]")
        if not isinstance(fd["path"], list):
            raise SnapshotError(f"flows[{i}].path must be an array")
        flows.append(Flow(_require_int(fd["id"], f"flows[{i}].id"),
                          tuple(_require_int(v, f"flows[{i}].path") for v in fd["path"]),
                          _require_int(fd["rate_bps"], f"flows[{i}].rate_bps"),
                          _require_int(fd.get("packet_size_bytes", 1024),
                                       f"flows[{i}].packet_size_bytes")))
    mac_doc = doc.get("mac", {})
    _check_keys(mac_doc, set(_MAC_KEYS), set(), "mac")
    mac = MacParams(**{_MAC_KEYS[k]: _require_int(v, f"mac.{k}") for k, v in mac_doc.items()})
    lim_doc = doc.get("limits", {})
    _check_keys(lim_doc, _LIMIT_KEYS, set(), "limits")
    limits = SimLimits(**{k: _require_int(v, f"limits.{k}") for k, v in lim_doc.items()})
    itf_doc = doc.get("interference", {"mode": "two_hop"})
    _check_keys(itf_doc, {"mode", "meters"}, {"mode"}, "interference")
    meters = itf_doc.get("meters")
    interference = InterferenceSpec(itf_doc["mode"], None if meters is None else float(meters))
    return NetworkSnapshot(tuple(nodes), tuple(links), tuple(flows), mac, limits, interference)


def parse_snapshot(text: str) -> NetworkSnapshot:
    """Parse and validate a JSON snapshot document.

    Raises SnapshotSyntaxError for malformed JSON and SnapshotError when the
    document is structurally wrong or fails validation. Warnings do not raise.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SnapshotSyntaxError(e.msg, e.lineno, e.colno) from None
    try:
        snap = snapshot_from_dict(doc)
    except (TypeError, KeyError) as e:
        raise SnapshotError(f"malformed snapshot: {e}") from None
    errs = errors_only(validate_snapshot(snap))
    if errs:
        raise SnapshotError("; ".join(str(d) for d in errs), errs)
    return snap


def snapshot_to_dict(s: NetworkSnapshot) -> dict:
    def node(n):
        d = {"id": n.id}
        if n.position is not None:
            d["x"], d["y"] = n.x, n.y
        return d

    doc = {
        "nodes": [node(n) for n in s.nodes],
        "links": [{"src": l.src, "dst": l.dst, "p": l.delivery_prob, "rate_bps": l.rate_bps}
                  for l in s.links],
        "flows": [{"id": f.flow_id, "path": list(f.path), "rate_bps": f.rate_bps,
                   "packet_size_bytes": f.packet_size_bytes} for f in s.flows],
        "mac": {k: getattr(s.mac, v) for k, v in _MAC_DOC_KEYS.items()},
        "limits": {f.name: getattr(s.limits, f.name) for f in fields(SimLimits)},
        "interference": {"mode": s.interference.mode},
    }
    if s.interference.meters is not None:
        doc["interference"]["meters"] = s.interference.meters
    return doc


def serialize_snapshot(s: NetworkSnapshot) -> str:
    return json.dumps(snapshot_to_dict(s), indent=1)
