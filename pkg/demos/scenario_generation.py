"""Generate grid and random topologies, inspect link quality and candidate paths.

Run: python3 demos/scenario_generation.py
"""
import numpy as np

from meshperf.model import serialize_snapshot
from meshperf.scenario import LinkModel, gen_scenario, grid_outdoor, path_etx, random_indoor

# the distance curve behind every generated link
model = LinkModel(d_ref_m=90.0)
for d in (10, 30, 50, 70, 85):
    print(f"p({d} m) = {model.prob(d):.3f}")

grid, grid_cands = gen_scenario(grid_outdoor(seed=0, flow_count=6))
xs = [n.x for n in grid.nodes]
ys = [n.y for n in grid.nodes]
print(f"\ngrid: {len(grid.nodes)} nodes over {max(xs):.0f} x {max(ys):.0f} m, {len(grid.links)} links")

rand, rand_cands = gen_scenario(random_indoor(seed=0, flow_count=6))
probs = np.array([l.delivery_prob for l in rand.links])
print(f"random: {len(rand.nodes)} nodes, {len(rand.links)} links, "
      f"median p {np.median(probs):.3f}, {np.mean(probs > 0.9):.0%} above 0.9")

# flows cycle through the three CBR rates; each gets up to 5 ETX-ranked routes
links = rand.link_map()
for f in rand.flows:
    etx = [float(path_etx(links, p)) for p in rand_cands[f.flow_id]]
    print(f"flow {f.flow_id} {f.rate_bps // 1000} kb/s {f.path[0]}->{f.path[-1]}: "
          f"etx {', '.join(f'{e:.2f}' for e in etx)}")

# the snapshot document the CLI reads
print("\n" + serialize_snapshot(rand)[:300] + " ...")
