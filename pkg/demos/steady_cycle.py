"""Watch the estimator find a repeating state.

A checkpoint is taken each time every flow has delivered something new; the
first checkpoint whose canonical bytes match an earlier one closes the cycle.

Run: python3 demos/steady_cycle.py
"""
from meshperf import Flow, Link, NetworkSnapshot, Node
from meshperf.engine import Engine, format_event
from meshperf.estimator import run_estimation

# three-node chain; the second hop drops every other frame (p = 0.5)
nodes = tuple(Node(i, 50.0 * i, 0.0) for i in range(3))
links = (Link(0, 1, 1.0), Link(1, 0, 1.0), Link(1, 2, 0.5), Link(2, 1, 0.5))
snap = NetworkSnapshot(nodes, links, (Flow(0, (0, 1, 2), 485_000),))

# the first few instants of the event trace
engine = Engine(snap)
for _ in range(6):
    for ev in engine.step():
        print(format_event(ev))

run = run_estimation(snap)
i, j = run.detector.match
hist = run.detector.history
print(f"\ncheckpoint {j} repeats checkpoint {i}")
print(f"cycle: {hist[i].sim_time_us} -> {hist[j].sim_time_us} us ({run.report.cycle_length_us} us)")
print("canonical state size:", len(hist[j].fingerprint.canonical_bytes), "bytes")
print(run.report.to_json())
