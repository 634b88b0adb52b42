"""Grouped data containers and the group-level balancing statistic.

The balancing statistic is the per-group mean of the local vector
(w_i, x_i, sum_j A_ij w_j, sum_j A_ij x_j): own treatment and covariates
plus radius-1 network aggregates of both. Conditioning nuisance models on
it is what neutralizes between-group confounding; higher-order structure
is left to the GCN layers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import Graph


def _frozen_array(values, dtype=float, ndim=1):
    arr = np.array(values, dtype=dtype)
    if arr.ndim != ndim:
        raise ValueError(f"expected {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GroupData:
    """One group's observations: network, treatments, covariates, outcomes."""

    group_id: object
    graph: Graph
    W: np.ndarray
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "W", _frozen_array(self.W, dtype=np.int64))
        object.__setattr__(self, "X", _frozen_array(self.X, ndim=2))
        object.__setattr__(self, "Y", _frozen_array(self.Y))
        n = self.graph.n_nodes
        if n < 2:
            raise ValueError(f"group {self.group_id!r}: group size must be >= 2")
        for name in ("W", "X", "Y"):
            if len(getattr(self, name)) != n:
                raise ValueError(
                    f"group {self.group_id!r}: {name} has length "
                    f"{len(getattr(self, name))}, graph has {n} nodes"
                )
        if not np.isin(self.W, (0, 1)).all():
            raise ValueError(f"group {self.group_id!r}: W entries must be 0 or 1")

    @property
    def n_units(self) -> int:
        return self.graph.n_nodes

    @property
    def n_covariates(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class GroupedPopulation:
    """M independently sampled groups with a common covariate dimension."""

    groups: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.groups) < 1:
            raise ValueError("population must contain at least one group")
        ids = [g.group_id for g in self.groups]
        if len(set(ids)) != len(ids):
            raise ValueError("group ids must be distinct")
        dims = {g.n_covariates for g in self.groups}
        if len(dims) != 1:
            raise ValueError(f"covariate dimension differs across groups: {sorted(dims)}")

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def n_total(self) -> int:
        return sum(g.n_units for g in self.groups)

    @property
    def n_covariates(self) -> int:
        return self.groups[0].n_covariates


@dataclass(frozen=True)
class BalancingStatistic:
    """Group means of (W, X, AW, AX); dimension 2 + 2d."""

    w_bar: float
    x_bar: np.ndarray
    aw_bar: float
    ax_bar: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate(([self.w_bar], self.x_bar, [self.aw_bar], self.ax_bar))

    @property
    def dimension(self) -> int:
        return 2 + 2 * len(self.x_bar)


def local_statistic(i: int, group: GroupData) -> np.ndarray:
    """Unit i's local vector (w_i, x_i, sum_j A_ij w_j, sum_j A_ij x_j)."""
    nbrs = group.graph.neighbors(i)
    if len(nbrs):
        aw = float(group.W[nbrs].sum())
        ax = group.X[nbrs].sum(axis=0)
    else:
        aw = 0.0
        ax = np.zeros(group.n_covariates)
    return np.concatenate(([float(group.W[i])], group.X[i], [aw], ax))


def balancing_statistic(group: GroupData) -> BalancingStatistic:
    """Mean of the local statistic over all units of the group."""
    adj = group.graph.adjacency_matrix()
    aw = adj @ group.W.astype(float)
    ax = adj @ group.X
    return BalancingStatistic(
        w_bar=float(group.W.mean()),
        x_bar=group.X.mean(axis=0),
        aw_bar=float(aw.mean()),
        ax_bar=ax.mean(axis=0),
    )


def node_features(group: GroupData, include_balance: bool = True) -> np.ndarray:
    """Per-node model inputs: X alone, or X with the group's balancing
    statistic broadcast to every row.

    The broadcast block is constant within a group and is what
    distinguishes the full estimator from the network-only baseline.
    """
    if not include_balance:
        return np.array(group.X, dtype=float)
    sbar = balancing_statistic(group).as_vector()
    return np.hstack([group.X, np.tile(sbar, (group.n_units, 1))])


def standardize_features(blocks: list) -> list:
    """Z-score feature columns using moments pooled over all groups.

    Constant columns are centered and left unscaled. Returns new arrays in
    the same per-group layout.
    """
    stacked = np.vstack(blocks)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return [(b - mean) / std for b in blocks]


def merge_population(pop: GroupedPopulation, group_id="__pooled__") -> GroupData:
    """Disjoint union of all groups as a single GroupData.

    Node ids are offset group by group; the union graph is block diagonal,
    so a single model fit on it equals per-group forward passes with
    shared parameters.
    """
    offsets = np.cumsum([0] + [g.n_units for g in pop.groups[:-1]])
    edges = []
    for off, g in zip(offsets, pop.groups):
        edges.extend((int(i) + off, int(j) + off) for i, j in g.graph.edges)
    graph = Graph(pop.n_total, edges)
    return GroupData(
        group_id=group_id,
        graph=graph,
        W=np.concatenate([g.W for g in pop.groups]),
        X=np.vstack([g.X for g in pop.groups]),
        Y=np.concatenate([g.Y for g in pop.groups]),
    )


def group_offsets(pop: GroupedPopulation) -> np.ndarray:
    """Start index of each group inside the merged layout, plus the total."""
    return np.cumsum([0] + [g.n_units for g in pop.groups])
