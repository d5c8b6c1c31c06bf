"""Neighbor graph, smooth bandwidths, and fuzzy simplicial set.

The bandwidth equation Σ_j exp(−max(0, d_ij − ρ_i)/σ_i) = log₂(k) has no
root when the constant terms (d = ρ) already reach the target, or when
every term is constant; those rows clamp to the bracket bounds and are
flagged degenerate instead of erroring.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import sparse

from ..errors import ValidationError

SIGMA_LOWER = 1e-8
SIGMA_UPPER = 1e8
_BISECT_REL_TOL = 1e-5


@dataclass(frozen=True)
class NeighborGraph:
    """Exact k-nearest-neighbor table; self excluded, rows sorted by distance."""

    indices: np.ndarray
    distances: np.ndarray
    n_neighbors: int

    def __post_init__(self) -> None:
        idx, dist = self.indices, self.distances
        if idx.ndim != 2 or idx.shape != dist.shape or idx.shape[1] != self.n_neighbors:
            raise ValidationError("indices and distances must be [n, k] with k = n_neighbors")
        if (idx == np.arange(idx.shape[0])[:, None]).any():
            raise ValidationError("neighbor lists must exclude the point itself")
        if not np.isfinite(dist).all() or (dist < 0).any():
            raise ValidationError("distances must be finite and non-negative")
        if (np.diff(dist, axis=1) < 0).any():
            raise ValidationError("distances must be sorted ascending per point")


def knn_graph(points: np.ndarray, n_neighbors: int) -> NeighborGraph:
    """Brute-force exact Euclidean kNN; ties resolved toward the lower index."""
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or not np.isfinite(X).all():
        raise ValidationError("points must be a finite [n, d] matrix")
    n = X.shape[0]
    if not 1 <= n_neighbors < n:
        raise ValidationError(f"n_neighbors must be in [1, n), got {n_neighbors} for n={n}")

    sq = (X * X).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")[:, :n_neighbors]
    dist = np.sqrt(np.take_along_axis(d2, order, axis=1))
    return NeighborGraph(indices=order, distances=dist, n_neighbors=n_neighbors)


class Bandwidths(NamedTuple):
    rho: np.ndarray
    sigma: np.ndarray
    degenerate: np.ndarray


def smooth_bandwidths(graph: NeighborGraph) -> Bandwidths:
    """Per-point (ρ, σ) by bisection; clamped rows are flagged degenerate.

    ρ_i is the distance to the nearest neighbor. σ_i solves
    Σ_j exp(−max(0, d_ij − ρ_i)/σ_i) = log₂(k) to 1e-5 relative
    tolerance. Rows with no σ-dependent term clamp to the upper bound;
    rows whose constant terms alone reach the target clamp to the lower
    bound (the infimum of the increasing sum).
    """
    dist = graph.distances
    n, k = dist.shape
    rho = dist[:, 0].copy()
    adj = np.maximum(dist - rho[:, None], 0.0)
    target = float(np.log2(k))

    has_var = (adj > 0).any(axis=1)
    const_count = (adj == 0).sum(axis=1).astype(np.float64)

    sigma = np.full(n, SIGMA_UPPER)
    degenerate = ~has_var  # flat sum = k for every σ
    lower_rows = has_var & (const_count >= target)
    sigma[lower_rows] = SIGMA_LOWER
    degenerate = degenerate | lower_rows

    solve = has_var & ~lower_rows
    if solve.any():
        sub = adj[solve]
        lo = np.full(sub.shape[0], SIGMA_LOWER)
        hi = np.full(sub.shape[0], SIGMA_UPPER)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            too_high = np.exp(-sub / mid[:, None]).sum(axis=1) > target
            hi = np.where(too_high, mid, hi)
            lo = np.where(too_high, lo, mid)
            if np.all(hi - lo <= _BISECT_REL_TOL * mid):
                break
        sigma[solve] = 0.5 * (lo + hi)
    return Bandwidths(rho=rho, sigma=sigma, degenerate=degenerate)


@dataclass(frozen=True)
class FuzzyGraph:
    """Symmetric fuzzy membership graph in COO form, entries in (0, 1]."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray
    degenerate: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self) -> None:
        if not (len(self.rows) == len(self.cols) == len(self.weights)):
            raise ValidationError("rows, cols, weights must align")
        if len(self.weights) and ((self.weights <= 0).any() or (self.weights > 1).any()):
            raise ValidationError("fuzzy weights must lie in (0, 1]")

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self.rows, self.cols] = self.weights
        return out


def fuzzy_simplicial_set(graph: NeighborGraph) -> FuzzyGraph:
    """Directed weights exp(−max(0, d−ρ)/σ) unioned into w = a + b − a·b."""
    bw = smooth_bandwidths(graph)
    n, k = graph.distances.shape
    directed = np.exp(-np.maximum(graph.distances - bw.rho[:, None], 0.0)
                      / bw.sigma[:, None])
    rows = np.repeat(np.arange(n), k)
    mat = sparse.coo_matrix((directed.ravel(), (rows, graph.indices.ravel())),
                            shape=(n, n)).tocsr()
    trans = mat.T.tocsr()
    union = mat + trans - mat.multiply(trans)
    union.eliminate_zeros()  # underflowed directed weights leave explicit zeros
    # a + b − a·b = 1 exactly whenever a = 1; rounding of fl(1+b) − b can
    # land one ulp off, so snap those entries back to the exact value
    ones = sparse.coo_matrix(((directed.ravel() == 1.0).astype(np.float64),
                              (rows, graph.indices.ravel())),
                             shape=(n, n)).tocsr()
    union = union.maximum((ones + ones.T).sign())
    coo = union.tocoo()
    order = np.lexsort((coo.col, coo.row))
    # a + b − a·b can round a hair above 1 when a = 1 and b is tiny
    weights = np.minimum(coo.data[order], 1.0)
    return FuzzyGraph(n=n, rows=coo.row[order].astype(np.int64),
                      cols=coo.col[order].astype(np.int64), weights=weights,
                      rho=bw.rho, sigma=bw.sigma, degenerate=bw.degenerate)
