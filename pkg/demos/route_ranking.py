"""Rank one flow's candidate routes and check the order against the oracle.

Run: python3 demos/route_ranking.py
"""
from dataclasses import replace

from meshperf.oracle import OracleConfig, run_stochastic
from meshperf.ranker import classification_inversions, order_by_metric, rank_candidates, subject_flow_candidates
from meshperf.scenario import gen_scenario, grid_outdoor, path_etx

snap, cands = gen_scenario(grid_outdoor(seed=4, flow_count=3))
links = snap.link_map()

# make flow 0 heavy enough that route choice matters
snap = replace(snap, flows=(replace(snap.flows[0], rate_bps=20_000_000),) + snap.flows[1:])

print("candidate routes for flow 0 (ETX order):")
for p in cands[0]:
    print(f"  {p}  etx={float(path_etx(links, p)):.2f}")

candidates = subject_flow_candidates(0, cands[0])
ranking = rank_candidates(snap, candidates, "throughput")
print("\nestimated ranking:")
for row in ranking.to_list():
    print(f"  #{row['rank']} {row['candidate_id']}  {row['metric_value']:.1f} kb/s")

# reference: mean flow-averaged oracle throughput per candidate
cfg = OracleConfig(runs=4, base_seed=0, sim_duration_us=4_000_000)
ref_values = {}
for a in candidates:
    rep = run_stochastic(a.apply(snap), cfg)
    ref_values[a.candidate_id] = sum(f.throughput_kbps.mean for f in rep.flows) / len(rep.flows)
reference = order_by_metric([a.candidate_id for a in candidates], ref_values, "throughput")

print("\noracle ranking:", " ".join(reference))
print("inversions:", classification_inversions(ranking, reference).to_dict())
