"""One CBR flow over one perfect hop, estimated deterministically.

Run: python3 demos/single_flow.py
"""
from meshperf import Flow, Link, NetworkSnapshot, Node, estimate
from meshperf.model import MacParams, attempt_duration_us, packet_interval_us

# two nodes, one 18 Mb/s link that never loses a frame
nodes = (Node(0, 0.0, 0.0), Node(1, 40.0, 0.0))
links = (Link(0, 1, 1.0, 18_000_000),)
flow = Flow(0, (0, 1), 261_000, 1024)
snap = NetworkSnapshot(nodes, links, (flow,))

# a new packet every ~31.4 ms, each needing one 602 us attempt
print("packet interval:", packet_interval_us(flow), "us")
print("attempt airtime:", attempt_duration_us(MacParams(), 18_000_000, 1024, 0), "us")

report = estimate(snap)
print(report.to_json())

# the link is far from saturated, so throughput is the offered rate
f = report.flow(0)
print(f"throughput {f.throughput_kbps:.3f} kb/s  loss {f.loss_pct:.1f}%  delay {f.delay_ms:.3f} ms")

# push the same hop to 20 Mb/s: the queue overflows and the airtime sets the ceiling
hot = NetworkSnapshot(nodes, links, (Flow(0, (0, 1), 20_000_000, 1024),))
f = estimate(hot).flow(0)
print(f"saturated: throughput {f.throughput_kbps:.1f} kb/s  loss {f.loss_pct:.1f}%")
