"""Class-balanced k-fold assignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FoldInfeasibleError, ValidationError
from ..seeding import rng_for


@dataclass(frozen=True)
class FoldPlan:
    """Partition of sample indices into k stratified folds."""

    k: int
    assignment: np.ndarray  # fold index per sample

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)


def make_folds(labels: np.ndarray, k: int, seed: int) -> FoldPlan:
    """Stratified fold assignment: shuffled round-robin within each class.

    Every fold's positive (and negative) count is within 1 of the
    stratified ideal. Requires at least k samples of each class.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValidationError("fold count must be >= 2")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos < k or n_neg < k:
        raise FoldInfeasibleError(
            f"{k}-fold stratification needs >= {k} samples per class, "
            f"found {n_pos} positive / {n_neg} negative"
        )
    rng = rng_for(seed, "folds", k, len(labels))
    assignment = np.empty(len(labels), dtype=np.int64)
    for cls in (0, 1):
        members = rng.permutation(np.flatnonzero(labels == cls))
        assignment[members] = np.arange(members.size) % k
    return FoldPlan(k, assignment)
