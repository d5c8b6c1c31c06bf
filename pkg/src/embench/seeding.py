"""Deterministic seed derivation.

Every random draw in a run descends from one master seed through a
counter-based split keyed on string labels, so results do not depend on
execution order and any task can be rerun in isolation.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_key(master_seed: int, *labels: object) -> int:
    """Derive a 128-bit integer seed from the master seed and a label path."""
    h = hashlib.sha256()
    h.update(str(int(master_seed)).encode())
    for label in labels:
        h.update(b"/")
        h.update(str(label).encode())
    return int.from_bytes(h.digest()[:16], "little")


def rng_for(master_seed: int, *labels: object) -> np.random.Generator:
    """A dedicated PCG64 generator for the task named by `labels`."""
    return np.random.default_rng(derive_key(master_seed, *labels))


def uint64_seed(master_seed: int, *labels: object) -> int:
    """A nonzero 64-bit state for xorshift-style kernels (numba paths)."""
    return (derive_key(master_seed, *labels) & 0xFFFFFFFFFFFFFFFF) | 1
