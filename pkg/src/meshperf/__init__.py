"""Deterministic per-flow performance estimation for multihop CSMA/CA wireless networks."""
from .model import (
    Flow,
    InterferenceSpec,
    Link,
    MacParams,
    NetworkSnapshot,
    Node,
    SimLimits,
    SnapshotError,
    attempt_duration_us,
    packet_interval_us,
    parse_snapshot,
    serialize_snapshot,
    validate_snapshot,
)
from .estimator import EstimateReport, EstimationError, estimate

__version__ = "0.1.0"
