"""Deterministic estimate next to the seeded stochastic reference.

Run: python3 demos/oracle_comparison.py
"""
from meshperf import estimate
from meshperf.cli import compare_reports, format_table
from meshperf.oracle import OracleConfig, run_stochastic
from meshperf.scenario import gen_scenario, random_indoor

snap, _ = gen_scenario(random_indoor(seed=3, flow_count=6))
print(len(snap.nodes), "nodes,", len(snap.links), "links,", len(snap.flows), "flows")
for f in snap.flows:
    print(f"  flow {f.flow_id}: {f.rate_bps / 1e3:.0f} kb/s over {len(f.path) - 1} hops {f.path}")

est = estimate(snap)
orc = run_stochastic(snap, OracleConfig(runs=10, base_seed=0, sim_duration_us=10_000_000))

print(f"\nestimate: steady={est.steady}, {est.events_simulated} events, {est.wall_time_ms:.1f} ms")
print(format_table(compare_reports(est, orc)))
