"""Stochastic 2-D layout optimization of a fuzzy graph.

Sequential, seeded, and single-threaded: every directed edge is visited
on a per-edge epoch schedule proportional to its weight; each visit
attracts both endpoints and repels the head from negative samples drawn
with an xorshift generator. Coordinates are therefore bit-reproducible
for a fixed seed, but layout quality is only ever judged through
grouping-agreement metrics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import StageError, ValidationError
from ..probe.trees import _xorshift
from ..seeding import rng_for, uint64_seed
from .curve import fit_curve
from .graph import FuzzyGraph

DEFAULT_SWEEP: tuple[tuple[int, float], ...] = tuple(
    (nn, md) for nn in (15, 30, 50) for md in (0.1, 0.5)
)
INIT_BOX = 10.0
GRAD_CLIP = 4.0
REPULSION_STRENGTH = 1.0


@dataclass(frozen=True)
class UmapParams:
    n_neighbors: int
    min_dist: float
    spread: float = 1.0
    n_epochs: int = 500
    learning_rate: float = 1.0
    negative_sample_rate: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_neighbors < 2:
            raise ValidationError("n_neighbors must be >= 2")
        if self.min_dist < 0:
            raise ValidationError("min_dist must be >= 0")
        if self.spread <= 0:
            raise ValidationError("spread must be > 0")
        if self.n_epochs < 0:
            raise ValidationError("n_epochs must be >= 0")
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValidationError("learning_rate must be finite and > 0")
        if self.negative_sample_rate < 1:
            raise ValidationError("negative_sample_rate must be >= 1")


@dataclass(frozen=True)
class UmapLayout:
    coordinates: np.ndarray
    a: float
    b: float

    def __post_init__(self) -> None:
        if self.coordinates.ndim != 2 or self.coordinates.shape[1] != 2:
            raise ValidationError("coordinates must be [n, 2]")
        if not np.isfinite(self.coordinates).all():
            raise ValidationError("coordinates must be finite")
        if not (self.a > 0 and self.b > 0):
            raise ValidationError("curve parameters must be positive")


@njit(cache=True)
def _clip(x):
    if x > GRAD_CLIP:
        return GRAD_CLIP
    if x < -GRAD_CLIP:
        return -GRAD_CLIP
    return x


@njit(cache=True)
def _run_epochs(emb, head, tail, epochs_per_sample, n_epochs, alpha0,
                a, b, gamma, neg_rate, rng_state):
    n = emb.shape[0]
    epoch_of_next_sample = epochs_per_sample.copy()
    epochs_per_neg = epochs_per_sample / neg_rate
    epoch_of_next_neg = epochs_per_neg.copy()
    for epoch in range(n_epochs):
        alpha = alpha0 * (1.0 - epoch / n_epochs)
        for e in range(head.shape[0]):
            if epoch_of_next_sample[e] > epoch:
                continue
            i = head[e]
            j = tail[e]
            dx = emb[i, 0] - emb[j, 0]
            dy = emb[i, 1] - emb[j, 1]
            d2 = dx * dx + dy * dy
            if d2 > 0.0:
                coeff = (-2.0 * a * b * d2 ** (b - 1.0)) / (a * d2 ** b + 1.0)
                gx = _clip(coeff * dx)
                gy = _clip(coeff * dy)
            else:
                gx = 0.0
                gy = 0.0
            emb[i, 0] += alpha * gx
            emb[i, 1] += alpha * gy
            emb[j, 0] -= alpha * gx
            emb[j, 1] -= alpha * gy
            epoch_of_next_sample[e] += epochs_per_sample[e]

            n_neg = int((epoch - epoch_of_next_neg[e]) / epochs_per_neg[e])
            for _ in range(n_neg):
                other = int(_xorshift(rng_state) % np.uint64(n))
                if other == i:
                    continue
                dx = emb[i, 0] - emb[other, 0]
                dy = emb[i, 1] - emb[other, 1]
                d2 = dx * dx + dy * dy
                if d2 > 0.0:
                    coeff = (2.0 * gamma * b) / ((0.001 + d2) * (a * d2 ** b + 1.0))
                    gx = _clip(coeff * dx)
                    gy = _clip(coeff * dy)
                else:
                    gx = GRAD_CLIP
                    gy = GRAD_CLIP
                emb[i, 0] += alpha * gx
                emb[i, 1] += alpha * gy
            epoch_of_next_neg[e] += n_neg * epochs_per_neg[e]


def optimize_layout(fuzzy: FuzzyGraph, params: UmapParams) -> UmapLayout:
    """SGD cross-entropy layout; init uniform in [−10, 10]²."""
    a, b = fit_curve(params.min_dist, params.spread)
    n = fuzzy.n
    emb = rng_for(params.seed, "umap-init", n).uniform(-INIT_BOX, INIT_BOX, (n, 2))
    if params.n_epochs > 0 and len(fuzzy.weights):
        epochs_per_sample = fuzzy.weights.max() / fuzzy.weights
        rng_state = np.array([uint64_seed(params.seed, "umap-neg", n)],
                             dtype=np.uint64)
        _run_epochs(emb, fuzzy.rows, fuzzy.cols,
                    epochs_per_sample.astype(np.float64), params.n_epochs,
                    float(params.learning_rate), a, b, REPULSION_STRENGTH,
                    float(params.negative_sample_rate), rng_state)
    if not np.isfinite(emb).all():
        raise StageError(
            "optimize_layout",
            "layout diverged to non-finite coordinates; "
            "try a smaller learning rate",
        )
    return UmapLayout(coordinates=emb, a=a, b=b)


def embed(points: np.ndarray, params: UmapParams) -> UmapLayout:
    """knn_graph → fuzzy_simplicial_set → optimize_layout."""
    from .graph import fuzzy_simplicial_set, knn_graph

    graph = knn_graph(points, params.n_neighbors)
    return optimize_layout(fuzzy_simplicial_set(graph), params)
