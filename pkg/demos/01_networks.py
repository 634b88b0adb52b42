"""Small-world networks and the summaries that drive HAC bandwidths.

Generates Watts-Strogatz graphs across the rewiring range, shows how the
average path length collapses as shortcuts appear, and queries shortest
paths and s-hop neighborhoods on one of them.
"""

import numpy as np

from netmundlak import bfs_distances, graph_stats, neighborhood, ws_generate

print("=== Watts-Strogatz rewiring sweep (n=50, k=4) ===")
print(f"{'p':>6} {'edges':>6} {'avg degree':>11} {'avg path length':>16}")
for p in (0.0, 0.05, 0.1, 0.5, 1.0):
    g = ws_generate(50, 4, p, seed=7)
    stats = graph_stats(g)
    print(f"{p:>6.2f} {g.n_edges:>6d} {stats.avg_degree:>11.2f} "
          f"{stats.avg_path_length:>16.3f}")
print("edge count is n*k/2 regardless of p: rewiring swaps edges one for one\n")

g = ws_generate(50, 4, 0.1, seed=7)
dist = bfs_distances(g, source=0)
print("=== BFS from node 0 on the p=0.1 graph ===")
print("eccentricity:", max(dist.values()))
print("distance histogram:", np.bincount(list(dist.values())).tolist())

for s in range(4):
    print(f"|neighborhood(0, s={s})| = {len(neighborhood(g, 0, s))}")
