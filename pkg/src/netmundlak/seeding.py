"""Deterministic derivation of nested random seeds.

Every parallel unit of work (replication, nuisance fit, oracle redraw) gets
its own seed derived from a base seed plus a path of labels, so any single
piece is reproducible in isolation and results never depend on scheduling.
Python's built-in hash() is salted per process; blake2b is not.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK = (1 << 63) - 1


def child_seed(base_seed: int, *parts) -> int:
    """Derive a stable 63-bit seed from ``base_seed`` and a label path."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(base_seed)).encode())
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode())
    return int.from_bytes(h.digest(), "big") & _MASK


def rng_for(base_seed: int, *parts) -> np.random.Generator:
    """Generator seeded by :func:`child_seed` of the same arguments."""
    return np.random.default_rng(child_seed(base_seed, *parts))
