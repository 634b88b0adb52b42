"""Group-level undirected networks.

Provides the graph container used throughout the package, a Watts-Strogatz
small-world generator, BFS shortest-path queries, s-hop neighborhoods, and
the two graph summaries (average degree, average path length) consumed by
the HAC bandwidth rule.

Nodes are dense integers 0..n-1 within each group; graphs are immutable
after construction and safe to share across workers.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph


@dataclass(frozen=True)
class GraphStats:
    """Summaries of one group's network.

    avg_degree is N^-1 * sum_ij A_ij (twice the edge count over n).
    avg_path_length is the mean shortest-path length over connected ordered
    pairs, NaN when no pair of distinct nodes is connected.
    """

    avg_degree: float
    avg_path_length: float
    n_components: int


class Graph:
    """Simple undirected graph: no self-loops, no parallel edges.

    Parameters
    ----------
    n_nodes : int
        Number of nodes; node ids are 0..n_nodes-1.
    edges : iterable of (int, int)
        Unordered node pairs. Pairs are canonicalized; exact duplicates
        collapse silently (strict duplicate detection belongs to the CSV
        reader, not the constructor).
    """

    def __init__(self, n_nodes: int, edges=()):
        n_nodes = int(n_nodes)
        if n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        canonical = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < n_nodes and 0 <= j < n_nodes):
                raise ValueError(f"edge ({i}, {j}) out of range for n={n_nodes}")
            canonical.add((i, j) if i < j else (j, i))
        neighbors = [[] for _ in range(n_nodes)]
        for i, j in sorted(canonical):
            neighbors[i].append(j)
            neighbors[j].append(i)
        self.n_nodes = n_nodes
        self.edges = frozenset(canonical)
        self._neighbors = [np.array(sorted(ns), dtype=np.int64) for ns in neighbors]
        self._adj = None
        self._stats = None

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(ns) for ns in self._neighbors], dtype=np.int64)

    def neighbors(self, i: int) -> np.ndarray:
        return self._neighbors[i]

    def has_edge(self, i: int, j: int) -> bool:
        key = (i, j) if i < j else (j, i)
        return key in self.edges

    def adjacency_matrix(self) -> sp.csr_matrix:
        """Binary adjacency in CSR form (cached)."""
        if self._adj is None:
            rows, cols = [], []
            for i, j in self.edges:
                rows += [i, j]
                cols += [j, i]
            self._adj = sp.csr_matrix(
                (np.ones(len(rows)), (rows, cols)),
                shape=(self.n_nodes, self.n_nodes),
            )
        return self._adj

    def __repr__(self):  # pragma: no cover
        return f"Graph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


def ws_generate(n: int, k: int, p: float, seed: int) -> Graph:
    """Generate a Watts-Strogatz small-world graph.

    Starts from a ring lattice where every node is linked to its k/2
    nearest neighbors on each side, then scans the lattice edges one
    distance class at a time and, with probability p, replaces the far
    endpoint by a uniformly drawn node, resampling on self-loop or
    duplicate collisions. Each rewiring swaps exactly one edge for one
    edge, so the result always has n*k/2 edges.

    Parameters
    ----------
    n, k : int
        Node count and (even) lattice degree, n > k >= 2.
    p : float
        Rewiring probability in [0, 1].
    seed : int
        Seeds the generator; identical seeds give identical graphs.
    """
    if k < 2 or k % 2 != 0:
        raise ValueError(f"k must be an even integer >= 2, got {k}")
    if n <= k:
        raise ValueError(f"n must exceed k, got n={n}, k={k}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    rng = np.random.default_rng(seed)

    neighbor_sets = [set() for _ in range(n)]
    for j in range(1, k // 2 + 1):
        for i in range(n):
            v = (i + j) % n
            neighbor_sets[i].add(v)
            neighbor_sets[v].add(i)

    for j in range(1, k // 2 + 1):
        for i in range(n):
            if rng.random() >= p:
                continue
            if len(neighbor_sets[i]) >= n - 1:
                continue  # saturated node: no fresh target exists
            v = (i + j) % n
            while True:
                w = int(rng.integers(n))
                if w != i and w not in neighbor_sets[i]:
                    break
            neighbor_sets[i].remove(v)
            neighbor_sets[v].remove(i)
            neighbor_sets[i].add(w)
            neighbor_sets[w].add(i)

    edges = {(i, j) for i in range(n) for j in neighbor_sets[i] if i < j}
    return Graph(n, edges)


def bfs_distances(g: Graph, source: int, cap: int | None = None) -> dict:
    """Shortest-path distances from ``source`` by breadth-first search.

    Returns a dict node -> distance containing exactly the reachable nodes
    (unreachable nodes are absent). With ``cap`` set, only nodes within
    that distance are explored or returned.
    """
    if not 0 <= source < g.n_nodes:
        raise IndexError(f"source {source} out of range for n={g.n_nodes}")
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u]
        if cap is not None and du >= cap:
            continue
        for v in g.neighbors(u):
            v = int(v)
            if v not in dist:
                dist[v] = du + 1
                queue.append(v)
    return dist


def neighborhood(g: Graph, i: int, s: int) -> set:
    """The s-hop neighborhood {j : dist(i, j) <= s}; always contains i."""
    if s < 0:
        raise ValueError(f"radius must be >= 0, got {s}")
    return set(bfs_distances(g, i, cap=s))


def graph_stats(g: Graph) -> GraphStats:
    """Average degree and average path length of one group's network.

    The path-length average runs over connected ordered pairs of distinct
    nodes only; a graph with no such pair (e.g. edgeless) reports NaN,
    which downstream forces the zero-bandwidth branch of the HAC rule.
    Cached on the graph instance.
    """
    if g._stats is not None:
        return g._stats
    n = g.n_nodes
    avg_degree = 2.0 * g.n_edges / n
    if g.n_edges == 0:
        stats = GraphStats(0.0, float("nan"), n)
    else:
        adj = g.adjacency_matrix()
        n_components = int(csgraph.connected_components(adj, directed=False)[0])
        dist = csgraph.shortest_path(adj, directed=False, unweighted=True)
        off_diag = ~np.eye(n, dtype=bool)
        finite = np.isfinite(dist) & off_diag
        apl = float(dist[finite].mean()) if finite.any() else float("nan")
        stats = GraphStats(avg_degree, apl, n_components)
    g._stats = stats
    return stats
