"""Network HAC variance: uniform kernel over BFS balls with a piecewise
bandwidth rule.

The variance sums cross-products of centered, trimmed unit effects over
node pairs within graph distance b_g of one another. Bandwidths come from
a per-group rule on average path length L and average degree: b = ceil(L/4)
when L < 2*log(n)/log(avg_degree), else ceil(L^(1/4)). Disconnected pairs
never contribute; a graph without any connected pair gets bandwidth 0
(diagonal-only variance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .balance import GroupedPopulation
from .graphs import GraphStats, graph_stats

BRANCH_QUARTER = "quarter_L"
BRANCH_FOURTH_ROOT = "fourth_root"


@dataclass(frozen=True)
class BandwidthPlan:
    per_group_bandwidth: dict
    branch_taken: dict


@dataclass(frozen=True)
class HacVariance:
    sigma2: float
    floored: bool
    per_group: dict  # group_id -> {"contribution", "bandwidth", "branch", "negative"}


def bandwidth(stats: GraphStats, n: int) -> tuple[int, str]:
    """Bandwidth and branch for one group.

    Natural logarithms; the branch decision is invariant to the log base
    since numerator and denominator share it. avg_degree <= 1 makes the
    threshold infinite, forcing the first branch.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    path_len = stats.avg_path_length
    if math.isnan(path_len):
        return 0, BRANCH_QUARTER
    if stats.avg_degree <= 1.0:
        take_quarter = True
    else:
        take_quarter = path_len < 2.0 * math.log(n) / math.log(stats.avg_degree)
    if take_quarter:
        return int(math.ceil(path_len / 4.0)), BRANCH_QUARTER
    return int(math.ceil(path_len ** 0.25)), BRANCH_FOURTH_ROOT


def plan_bandwidths(pop: GroupedPopulation) -> BandwidthPlan:
    widths, branches = {}, {}
    for group in pop.groups:
        b, branch = bandwidth(graph_stats(group.graph), group.n_units)
        widths[group.group_id] = b
        branches[group.group_id] = branch
    return BandwidthPlan(widths, branches)


def _ball_sum(graph, source: int, radius: int, values: np.ndarray) -> float:
    """Sum of ``values`` over the BFS ball of ``radius`` around ``source``.

    Capped BFS per node instead of any all-pairs distance matrix.
    """
    total = values[source]
    visited = {source}
    frontier = [source]
    for _ in range(radius):
        nxt = []
        for u in frontier:
            for v in graph.neighbors(u):
                v = int(v)
                if v not in visited:
                    visited.add(v)
                    nxt.append(v)
                    total += values[v]
        if not nxt:
            break
        frontier = nxt
    return float(total)


def hac_variance(
    pop: GroupedPopulation,
    unit_effects: list,
    tau_hat: float,
    overlap,
    plan: BandwidthPlan,
) -> HacVariance:
    """sigma2 = M^-1 sum_g N_g^-1 sum_ij B_i (tau_i - tau_hat)
    B_j (tau_j - tau_hat) 1{dist(i,j) <= b_g}.

    Trimmed units carry a zero factor on both sides. A negative total
    (possible under the uniform kernel) floors at zero with a flag.
    """
    per_group = {}
    total = 0.0
    for group, effects, flags in zip(pop.groups, unit_effects, overlap.flags):
        b = plan.per_group_bandwidth[group.group_id]
        centered = np.where(flags, np.asarray(effects, dtype=float) - tau_hat, 0.0)
        if b == 0:
            group_sum = float(centered @ centered)
        else:
            group_sum = 0.0
            for i in np.flatnonzero(centered):
                group_sum += centered[i] * _ball_sum(group.graph, int(i), b, centered)
        contribution = group_sum / group.n_units
        per_group[group.group_id] = {
            "contribution": contribution,
            "bandwidth": int(b),
            "branch": plan.branch_taken[group.group_id],
            "negative": bool(contribution < 0),
        }
        total += contribution
    sigma2 = total / pop.n_groups
    floored = sigma2 < 0
    return HacVariance(max(sigma2, 0.0), floored, per_group)


def standard_error(
    sigma2_hat: float, n_total: int, b_bar: float = 1.0, normalize: bool = True
) -> float:
    """sqrt(sigma2 / N_total), divided by the overlap share when the
    B-normalized estimator is in use.

    N_total = sum of group sizes; this is the one place the root-n scaling
    lives, so alternates are a one-line swap.
    """
    if sigma2_hat < 0:
        raise ValueError("sigma2_hat must be >= 0")
    se = math.sqrt(sigma2_hat / n_total)
    if normalize:
        se /= b_bar
    return se
