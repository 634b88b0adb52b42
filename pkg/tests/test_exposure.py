"""Exposure mappings: hand cases, collapse identity, locality."""

import numpy as np
import pytest

from netmundlak.balance import GroupData
from netmundlak.exposure import (
    any_treated_neighbor,
    assign_exposure,
    joint_four_level,
    neighbor_threshold,
    own_treatment,
)
from netmundlak.graphs import Graph


def make_group(graph, W):
    n = graph.n_nodes
    return GroupData("g", graph, W=W, X=np.zeros((n, 1)), Y=np.zeros(n))


def star_graph(n_leaves):
    return Graph(n_leaves + 1, [(0, i) for i in range(1, n_leaves + 1)])


def test_any_neighbor_edgeless():
    group = make_group(Graph(4), W=[1, 1, 0, 1])
    assert any_treated_neighbor(group).levels.tolist() == [0, 0, 0, 0]


def test_any_neighbor_star_center_treated():
    group = make_group(star_graph(3), W=[1, 0, 0, 0])
    levels = any_treated_neighbor(group).levels
    assert levels.tolist() == [0, 1, 1, 1]
    group2 = make_group(star_graph(3), W=[1, 1, 0, 0])
    assert any_treated_neighbor(group2).levels[0] == 1


def test_any_neighbor_two_node_hand_case():
    group = make_group(Graph(2, [(0, 1)]), W=[1, 0])
    assert any_treated_neighbor(group).levels.tolist() == [0, 1]


def test_joint_four_level_codes():
    isolated_pair = make_group(Graph(2), W=[1, 0])
    levels = joint_four_level(isolated_pair).levels
    assert levels.tolist() == [2, 0]  # treated/untreated with no treated neighbors
    both_treated = make_group(Graph(2, [(0, 1)]), W=[1, 1])
    assert joint_four_level(both_treated).levels.tolist() == [3, 3]


def test_joint_collapses_to_any_neighbor():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 15))
        edges = {(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3}
        group = make_group(Graph(n, edges), rng.integers(0, 2, n))
        joint = joint_four_level(group)
        assert (joint.levels % 2 == any_treated_neighbor(group).levels).all()
        assert joint.n_levels == 4


def test_exposure_is_local():
    # flipping a non-neighbor's treatment never moves a unit's level
    g = Graph(4, [(0, 1), (2, 3)])
    base = make_group(g, W=[0, 1, 0, 0])
    flipped = make_group(g, W=[0, 1, 0, 1])  # node 3 is not a neighbor of 0 or 1
    for mapping in (own_treatment, any_treated_neighbor, joint_four_level):
        assert (mapping(base).levels[:2] == mapping(flipped).levels[:2]).all()


def test_own_treatment_is_w():
    group = make_group(Graph(3, [(0, 1)]), W=[1, 0, 1])
    assert own_treatment(group).levels.tolist() == [1, 0, 1]


def test_neighbor_threshold_extension():
    group = make_group(star_graph(3), W=[0, 1, 1, 0])
    assert neighbor_threshold(group, 2).levels.tolist() == [1, 0, 0, 0]
    with pytest.raises(ValueError):
        neighbor_threshold(group, 0)


def test_assign_exposure_dispatch():
    group = make_group(Graph(2, [(0, 1)]), W=[1, 0])
    assert assign_exposure(group, "any-neighbor").mapping_id == "any_treated_neighbor"
    assert assign_exposure(group, "joint4").n_levels == 4
    assert assign_exposure(group, "neighbor-threshold", threshold=1).levels.tolist() == [0, 1]
    with pytest.raises(ValueError):
        assign_exposure(group, "neighbor-threshold")
    with pytest.raises(ValueError):
        assign_exposure(group, "nope")
