"""A miniature replication campaign.

Runs a reduced version of the benchmark (fewer groups and replications
than the bundled desk configs) so the whole script finishes in about a
minute, and prints the method-by-metric table. For the real thing, run
the CLI against configs/low-weak-desk.cfg and friends.
"""

import time

from netmundlak import GcnConfig, Scenario, format_summary_table, run_scenario

scenario = Scenario("low", "weak", m_groups=8, ng_min=60, ng_max=100,
                    replications=10, base_seed=123)
config = GcnConfig(learning_rate=0.005, epochs=300, seed=123)

start = time.time()
result = run_scenario(
    scenario,
    methods=("gme-gnn", "gnn-only", "mundlak"),
    gnn_config=config,
    workers=2,
)
print(format_summary_table(result))
print(f"\n{scenario.replications} replications in {time.time() - start:.0f}s")
print("every replication is reseeded from (base_seed, rep_index), so the")
print("table is identical for any worker count")
