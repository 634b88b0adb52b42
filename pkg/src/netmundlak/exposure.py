"""Exposure mappings: per-unit finite exposure levels computed from the
group's full treatment vector and adjacency matrix.

A unit's level depends only on its own treatment and its radius-1
neighbors' treatments, never on farther nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .balance import GroupData

MAPPING_NAMES = ("own", "any-neighbor", "joint4", "neighbor-threshold")


@dataclass(frozen=True)
class ExposureAssignment:
    """Levels in 0..n_levels-1 for every unit of one group."""

    levels: np.ndarray
    n_levels: int
    mapping_id: str

    def __post_init__(self):
        levels = np.array(self.levels, dtype=np.int64)
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        if levels.min(initial=0) < 0 or levels.max(initial=0) >= self.n_levels:
            raise ValueError("exposure level out of range")


def _treated_neighbor_counts(group: GroupData) -> np.ndarray:
    return group.graph.adjacency_matrix() @ group.W.astype(float)


def own_treatment(group: GroupData) -> ExposureAssignment:
    """Level = own W; reduces to the no-interference setting."""
    return ExposureAssignment(group.W.copy(), 2, "own_treatment")


def any_treated_neighbor(group: GroupData) -> ExposureAssignment:
    """Level 1 iff the unit has at least one treated neighbor."""
    counts = _treated_neighbor_counts(group)
    return ExposureAssignment((counts >= 1).astype(np.int64), 2, "any_treated_neighbor")


def joint_four_level(group: GroupData) -> ExposureAssignment:
    """Own treatment crossed with the treated-neighbor indicator.

    Codes: 0 control/no treated neighbor, 1 control/treated neighbor,
    2 treated/no treated neighbor, 3 treated/treated neighbor. Collapsing
    over the own-treatment bit (level mod 2) recovers
    :func:`any_treated_neighbor` exactly.
    """
    counts = _treated_neighbor_counts(group)
    levels = 2 * group.W + (counts > 0).astype(np.int64)
    return ExposureAssignment(levels, 4, "joint_four_level")


def neighbor_threshold(group: GroupData, min_treated: int) -> ExposureAssignment:
    """Extension point: level 1 iff >= min_treated treated neighbors."""
    if min_treated < 1:
        raise ValueError("min_treated must be >= 1")
    counts = _treated_neighbor_counts(group)
    return ExposureAssignment(
        (counts >= min_treated).astype(np.int64), 2, "neighbor_threshold"
    )


def assign_exposure(group: GroupData, mapping: str, threshold: int | None = None) -> ExposureAssignment:
    """Resolve a mapping name ('own', 'any-neighbor', 'joint4',
    'neighbor-threshold') and apply it to one group."""
    if mapping == "own":
        return own_treatment(group)
    if mapping == "any-neighbor":
        return any_treated_neighbor(group)
    if mapping == "joint4":
        return joint_four_level(group)
    if mapping == "neighbor-threshold":
        if threshold is None:
            raise ValueError("mapping 'neighbor-threshold' requires a threshold")
        return neighbor_threshold(group, threshold)
    raise ValueError(f"unknown exposure mapping {mapping!r}; choose from {MAPPING_NAMES}")
