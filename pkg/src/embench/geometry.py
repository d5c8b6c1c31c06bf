"""Separability metrics over grouped point clouds.

Each metric is computed once against class labels and once against
dataset tags: kNN@10 neighborhood agreement, normalized centroid
separation, and the adjusted Rand index of a Gaussian-mixture hard
clustering against the grouping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .seeding import rng_for

VARIANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class GroupedCloud:
    """Finite points with a group id per point; >= 2 groups of >= 2 points."""

    points: np.ndarray
    group_of: np.ndarray
    grouping_kind: str  # "label" | "dataset"

    def __post_init__(self):
        if self.points.ndim != 2 or not np.isfinite(self.points).all():
            raise ValidationError("points must be a finite [n, d] matrix")
        if self.group_of.shape != (self.points.shape[0],):
            raise ValidationError("group_of length must match point count")
        _, counts = np.unique(self.group_of, return_counts=True)
        if counts.size < 2 or counts.min() < 2:
            raise ValidationError("need >= 2 groups with >= 2 points each")


def _as_points_groups(points, groups=None):
    if isinstance(points, GroupedCloud):
        return points.points, points.group_of
    return np.asarray(points, dtype=np.float64), np.asarray(groups)


def _squared_distances(X: np.ndarray) -> np.ndarray:
    sq = (X * X).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def knn_agreement(points, groups=None, k: int = 10) -> float:
    """Mean fraction of each point's k nearest neighbors sharing its group.

    Euclidean distances, self excluded; exact distance ties resolved
    toward the lower point index.
    """
    X, g = _as_points_groups(points, groups)
    n = X.shape[0]
    if k >= n:
        raise ValidationError(f"k={k} must be < n={n}")
    if k < 1:
        raise ValidationError("k must be >= 1")
    d2 = _squared_distances(X)
    np.fill_diagonal(d2, np.inf)
    # stable argsort keeps ascending index order among exact ties
    nbrs = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return float((g[nbrs] == g[:, None]).mean())


def centroid_separation(points, groups=None) -> tuple[float, bool]:
    """Normalized centroid distance, averaged over unordered group pairs.

    Pair value = |mu_A - mu_B| / (0.5 (s_A + s_B)) with s_G the mean
    distance of G's members to mu_G. A pair whose both spreads vanish is
    degenerate: 0 when the centroids coincide, +inf otherwise; the second
    return flags that a degenerate pair was hit.
    """
    X, g = _as_points_groups(points, groups)
    tags = np.unique(g)
    if tags.size < 2:
        raise ValidationError("centroid separation needs >= 2 groups")
    stats = {}
    for tag in tags:
        member = X[g == tag]
        if member.shape[0] < 2:
            raise ValidationError(f"group {tag!r} has < 2 points")
        mu = member.mean(axis=0)
        spread = float(np.linalg.norm(member - mu, axis=1).mean())
        stats[tag] = (mu, spread)
    vals = []
    degenerate = False
    for i in range(tags.size):
        for j in range(i + 1, tags.size):
            (mu_a, s_a), (mu_b, s_b) = stats[tags[i]], stats[tags[j]]
            dist = float(np.linalg.norm(mu_a - mu_b))
            denom = 0.5 * (s_a + s_b)
            if denom == 0.0:
                degenerate = True
                vals.append(0.0 if dist == 0.0 else math.inf)
            else:
                vals.append(dist / denom)
    return float(np.mean(vals)), degenerate


@dataclass
class GmmModel:
    """Diagonal-covariance Gaussian mixture fitted by EM."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_likelihoods: list[float] = field(default_factory=list)

    def _log_resp(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n, d = X.shape
        K = self.weights.shape[0]
        log_p = np.empty((n, K))
        for k in range(K):
            var = self.variances[k]
            log_p[:, k] = (
                np.log(self.weights[k])
                - 0.5 * (np.log(2.0 * np.pi * var).sum())
                - 0.5 * (((X - self.means[k]) ** 2) / var).sum(axis=1)
            )
        m = log_p.max(axis=1, keepdims=True)
        lse = m + np.log(np.exp(log_p - m).sum(axis=1, keepdims=True))
        return log_p - lse, lse

    def predict(self, X: np.ndarray) -> np.ndarray:
        log_resp, _ = self._log_resp(np.asarray(X, dtype=np.float64))
        return log_resp.argmax(axis=1)


def gmm_fit(points: np.ndarray, K: int, seed: int,
            max_iter: int = 200, rel_tol: float = 1e-4) -> GmmModel:
    """EM with diagonal covariances and farthest-point initialization.

    The first center is a seeded random point; the rest maximize the
    minimum distance to already-chosen centers. Variances are floored at
    1e-6; iteration stops when the relative log-likelihood improvement
    drops below rel_tol or after max_iter rounds.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or not np.isfinite(X).all():
        raise ValidationError("points must be a finite [n, d] matrix")
    n, d = X.shape
    if K < 1 or n < 2 * K:
        raise ValidationError(f"gmm needs n >= 2K, got n={n}, K={K}")

    rng = rng_for(seed, "gmm-init", n, K)
    centers = [int(rng.integers(0, n))]
    d2 = ((X - X[centers[0]]) ** 2).sum(axis=1)
    for _ in range(1, K):
        nxt = int(np.argmax(d2))  # ties resolved to the lowest index
        centers.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    # One hard-assignment pass around the chosen centers seeds each
    # component with local statistics; seeding every component with the
    # global variance would blur the responsibilities toward uniform and
    # let the relative-tolerance stop fire near the collapsed saddle.
    base_var = np.maximum(X.var(axis=0), VARIANCE_FLOOR)
    center_d2 = ((X[:, None, :] - X[centers][None, :, :]) ** 2).sum(axis=2)
    assign = np.argmin(center_d2, axis=1)
    weights = np.empty(K)
    means = X[centers].astype(np.float64).copy()
    variances = np.tile(base_var, (K, 1))
    for k in range(K):
        members = X[assign == k]
        weights[k] = max(len(members), 1)
        if len(members) >= 1:
            means[k] = members.mean(axis=0)
        if len(members) >= 2:
            variances[k] = np.maximum(members.var(axis=0), VARIANCE_FLOOR)
    model = GmmModel(weights=weights / weights.sum(), means=means,
                     variances=variances)

    prev_ll = -np.inf
    for _ in range(max_iter):
        log_resp, lse = model._log_resp(X)
        ll = float(lse.sum())
        model.log_likelihoods.append(ll)
        resp = np.exp(log_resp)
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-12)
        model.weights = nk / n
        model.means = (resp.T @ X) / nk[:, None]
        for k in range(K):
            diff2 = (X - model.means[k]) ** 2
            model.variances[k] = np.maximum(
                (resp[:, k][:, None] * diff2).sum(axis=0) / nk[k], VARIANCE_FLOOR
            )
        if np.isfinite(prev_ll) and abs(ll - prev_ll) < rel_tol * abs(prev_ll):
            break
        prev_ll = ll
    return model


def adjusted_rand_index(a, b) -> float:
    """Pair-counting ARI; 1.0 when the 0-denominator edge cases coincide."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("partitions must be equal-length vectors")
    n = a.shape[0]
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    sum_ij = int(sum(math.comb(int(v), 2) for v in table.flat))
    sum_a = int(sum(math.comb(int(v), 2) for v in table.sum(axis=1)))
    sum_b = int(sum(math.comb(int(v), 2) for v in table.sum(axis=0)))
    pairs = math.comb(n, 2)
    expected = sum_a * sum_b / pairs if pairs else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


@dataclass
class GeometryReport:
    """knn10 / centroid_sep / ari per grouping kind."""

    per_grouping: dict[str, dict]

    def to_dict(self) -> dict:
        return {kind: dict(vals) for kind, vals in self.per_grouping.items()}


def geometry_report(points: np.ndarray, labels, dataset_tags, seed: int,
                    k: int = 10) -> GeometryReport:
    """All three metrics against labels and against dataset tags.

    GMM components K equal the grouping's ground-truth group count; the
    mixture seed depends only on (seed, K), so groupings with the same K
    share one clustering — identical groupings get identical triples.
    """
    X = np.asarray(points, dtype=np.float64)
    groupings = {"label": np.asarray(labels), "dataset": np.asarray(dataset_tags)}
    clusterings: dict[int, np.ndarray] = {}
    per: dict[str, dict] = {}
    for kind, groups in groupings.items():
        GroupedCloud(X, groups, kind)  # validate
        K = int(np.unique(groups).size)
        if K not in clusterings:
            clusterings[K] = gmm_fit(X, K, seed).predict(X)
        sep, degenerate = centroid_separation(X, groups)
        per[kind] = {
            "knn10": knn_agreement(X, groups, k),
            "centroid_sep": sep,
            "centroid_sep_degenerate": degenerate,
            "ari": adjusted_rand_index(clusterings[K], groups),
        }
    return GeometryReport(per)
