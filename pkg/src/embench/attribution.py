"""Shapley feature attribution for fitted probes, top-k sets, overlap rates.

Three routes, by model family:
  linear  -> exact closed form phi_j = w_j (x_j - bg_j)
  trees   -> path-dependent TreeSHAP (polynomial-time recursion over
             decision paths with per-depth weight bookkeeping; ensembles
             sum per-tree attributions, each computed over training covers)
  others  -> kernel estimator: weighted least squares over coalitions with
             the Shapley kernel, exhaustive when the coalition budget
             covers all 2^q - 2 proper subsets

All three satisfy local accuracy in their score space: row sums plus the
base value reproduce the model score (exactly for linear/tree, up to the
regression fit for the kernel route).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .corpus import EmbeddingCorpus
from .errors import ValidationError
from .seeding import rng_for

log = logging.getLogger(__name__)


@dataclass
class AttributionMatrix:
    """Per-sample, per-feature signed contributions plus the background base."""

    values: np.ndarray  # [n, q]
    base_value: float
    notes: tuple[str, ...] = ()

    def mean_abs(self) -> np.ndarray:
        return np.abs(self.values).mean(axis=0)


@dataclass(frozen=True)
class FeatureSet:
    """Feature indices ranked by mean |phi| (descending), truncated at k."""

    indices: tuple[int, ...]
    mean_abs: tuple[float, ...]
    k: int

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise ValidationError("feature set contains duplicate indices")


@dataclass
class OverlapReport:
    sets: dict[str, FeatureSet]
    pairwise: dict[str, float]  # "tagA|tagB" (sorted) -> |A ∩ B| / k
    global_rate: float


# ---------------------------------------------------------------------------
# linear


def shap_linear(model, X: np.ndarray, background_mean: np.ndarray) -> AttributionMatrix:
    """Exact Shapley values of a linear margin: phi_ij = w_j (x_ij - bg_j)."""
    w = np.asarray(model.coef_, dtype=np.float64)
    intercept = float(model.intercept_)
    X = np.asarray(X, dtype=np.float64)
    background_mean = np.asarray(background_mean, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != w.shape[0] or background_mean.shape != w.shape:
        raise ValidationError(
            f"dimension mismatch: X {X.shape}, w {w.shape}, bg {background_mean.shape}"
        )
    values = w[None, :] * (X - background_mean[None, :])
    return AttributionMatrix(values, float(w @ background_mean + intercept))


# ---------------------------------------------------------------------------
# trees


@njit(cache=True)
def _tree_shap_one(feature, threshold, left, right, value, cover, x, phi, weight,
                   feat_b, z_b, o_b, w_b, plen,
                   st_node, st_plevel, st_pz, st_po, st_pi):
    """Path-dependent TreeSHAP for one sample of one tree, added into phi.

    Depth-first walk carrying, per recursion level, the subset-size weight
    path of the visited split features; leaves unwind each path element to
    read off its contribution. Buffers are caller-allocated scratch.
    """
    plen[0] = 0
    st_node[0] = 0
    st_plevel[0] = 0
    st_pz[0] = 1.0
    st_po[0] = 1.0
    st_pi[0] = -1
    top = 1
    while top > 0:
        top -= 1
        nd = st_node[top]
        pl = st_plevel[top]
        pz = st_pz[top]
        po = st_po[top]
        pi = st_pi[top]
        lvl = pl + 1
        l = plen[pl]
        for i in range(l):
            feat_b[lvl, i] = feat_b[pl, i]
            z_b[lvl, i] = z_b[pl, i]
            o_b[lvl, i] = o_b[pl, i]
            w_b[lvl, i] = w_b[pl, i]
        # extend the path with (pi, pz, po)
        feat_b[lvl, l] = pi
        z_b[lvl, l] = pz
        o_b[lvl, l] = po
        w_b[lvl, l] = 1.0 if l == 0 else 0.0
        for i in range(l - 1, -1, -1):
            w_b[lvl, i + 1] += po * w_b[lvl, i] * (i + 1.0) / (l + 1.0)
            w_b[lvl, i] = pz * w_b[lvl, i] * (l - i) / (l + 1.0)
        cur = l + 1
        plen[lvl] = cur
        f = feature[nd]
        if f < 0:
            ud = cur - 1
            for i in range(1, cur):
                one_f = o_b[lvl, i]
                zero_f = z_b[lvl, i]
                total = 0.0
                if one_f != 0.0:
                    nop = w_b[lvl, ud]
                    for j in range(ud - 1, -1, -1):
                        tmp = nop / ((j + 1.0) * one_f)
                        total += tmp
                        nop = w_b[lvl, j] - tmp * zero_f * (ud - j)
                else:
                    for j in range(ud - 1, -1, -1):
                        total += w_b[lvl, j] / (zero_f * (ud - j))
                total *= ud + 1.0
                phi[feat_b[lvl, i]] += weight * total * (one_f - zero_f) * value[nd]
        else:
            if x[f] <= threshold[nd]:
                hot, cold = left[nd], right[nd]
            else:
                hot, cold = right[nd], left[nd]
            iz = 1.0
            io = 1.0
            k = -1
            for i in range(1, cur):
                if feat_b[lvl, i] == f:
                    k = i
                    break
            if k >= 0:
                iz = z_b[lvl, k]
                io = o_b[lvl, k]
                ud = cur - 1
                if io != 0.0:
                    nop = w_b[lvl, ud]
                    for j in range(ud - 1, -1, -1):
                        tmp = nop * (ud + 1.0) / ((j + 1.0) * io)
                        nop = w_b[lvl, j] - tmp * iz * (ud - j) / (ud + 1.0)
                        w_b[lvl, j] = tmp
                else:
                    for j in range(ud - 1, -1, -1):
                        w_b[lvl, j] = w_b[lvl, j] * (ud + 1.0) / (iz * (ud - j))
                for j in range(k, ud):
                    feat_b[lvl, j] = feat_b[lvl, j + 1]
                    z_b[lvl, j] = z_b[lvl, j + 1]
                    o_b[lvl, j] = o_b[lvl, j + 1]
                cur -= 1
                plen[lvl] = cur
            rc = cover[nd]
            st_node[top] = cold
            st_plevel[top] = lvl
            st_pz[top] = iz * cover[cold] / rc
            st_po[top] = 0.0
            st_pi[top] = f
            top += 1
            st_node[top] = hot
            st_plevel[top] = lvl
            st_pz[top] = iz * cover[hot] / rc
            st_po[top] = io
            st_pi[top] = f
            top += 1


@njit(cache=True)
def _tree_depth(feature, left, right):
    depth = np.zeros(feature.shape[0], np.int64)
    best = 0
    for nd in range(feature.shape[0]):
        if feature[nd] >= 0:
            depth[left[nd]] = depth[nd] + 1
            depth[right[nd]] = depth[nd] + 1
    for nd in range(feature.shape[0]):
        if depth[nd] > best:
            best = depth[nd]
    return best


@njit(cache=True)
def _tree_shap_batch(feature, threshold, left, right, value, cover, X, out, weight):
    d = _tree_depth(feature, left, right)
    levels = d + 3
    feat_b = np.full((levels, levels), -1, np.int64)
    z_b = np.zeros((levels, levels), np.float64)
    o_b = np.zeros((levels, levels), np.float64)
    w_b = np.zeros((levels, levels), np.float64)
    plen = np.zeros(levels, np.int64)
    cap = feature.shape[0] + 2
    st_node = np.empty(cap, np.int64)
    st_plevel = np.empty(cap, np.int64)
    st_pz = np.empty(cap, np.float64)
    st_po = np.empty(cap, np.float64)
    st_pi = np.empty(cap, np.int64)
    for s in range(X.shape[0]):
        _tree_shap_one(feature, threshold, left, right, value, cover, X[s],
                       out[s], weight, feat_b, z_b, o_b, w_b, plen,
                       st_node, st_plevel, st_pz, st_po, st_pi)


def tree_expectation(tree) -> float:
    """Cover-weighted mean of leaf values: the empty-coalition expectation."""
    leaves = tree.feature < 0
    return float((tree.cover[leaves] / tree.cover[0] * tree.value[leaves]).sum())


def shap_tree(model, X: np.ndarray) -> AttributionMatrix:
    """Exact path-dependent Shapley values for a CART model or ensemble.

    The model must expose shap_trees / shap_tree_weight / shap_base_offset
    (decision tree, random forest, and boosted trees all do). Attribution
    is in the model's additive score space: probability for averaging
    ensembles, margin for boosted trees.
    """
    trees = getattr(model, "shap_trees", None)
    if trees is None:
        raise ValidationError(f"{type(model).__name__} is not a tree model")
    X = np.ascontiguousarray(X, dtype=np.float64)
    values = np.zeros((X.shape[0], X.shape[1]))
    weight = float(model.shap_tree_weight)
    base = float(model.shap_base_offset)
    for tree in trees:
        _tree_shap_batch(tree.feature, tree.threshold, tree.left, tree.right,
                         tree.value, tree.cover, X, values, weight)
        base += weight * tree_expectation(tree)
    return AttributionMatrix(values, base)


# ---------------------------------------------------------------------------
# kernel


def _kernel_weight(q: int, s: int) -> float:
    return (q - 1) / (math.comb(q, s) * s * (q - s))


def _all_coalitions(q: int) -> tuple[np.ndarray, np.ndarray]:
    masks = []
    weights = []
    for s in range(1, q):
        w = _kernel_weight(q, s)
        for subset in itertools.combinations(range(q), s):
            row = np.zeros(q)
            row[list(subset)] = 1.0
            masks.append(row)
            weights.append(w)
    return np.array(masks), np.array(weights)


def _sampled_coalitions(q: int, m: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Draw coalitions with probability proportional to the Shapley kernel.

    Sampling already encodes the kernel weighting, so duplicates are
    aggregated by count and the regression runs with those counts as
    weights.
    """
    sizes = np.arange(1, q)
    p = (q - 1) / (sizes * (q - sizes))
    p = p / p.sum()
    chosen: dict[bytes, int] = {}
    draws = rng.choice(sizes, size=m, p=p)
    for s in draws:
        members = rng.choice(q, size=int(s), replace=False)
        row = np.zeros(q, dtype=np.int8)
        row[members] = 1
        key = row.tobytes()
        chosen[key] = chosen.get(key, 0) + 1
    masks = np.array([np.frombuffer(k, dtype=np.int8) for k in chosen], dtype=np.float64)
    counts = np.array(list(chosen.values()), dtype=np.float64)
    return masks, counts


def shap_kernel(
    score_fn,
    X: np.ndarray,
    background: np.ndarray,
    m_coalitions: int = 256,
    seed: int = 0,
) -> AttributionMatrix:
    """Model-agnostic Shapley estimate by kernel-weighted least squares.

    Coalition values are path-independent interventional expectations:
    masked-out features are replaced by each background row in turn and
    the scores averaged. The sum constraint (phi summing to f(x) minus
    the mean background score) is enforced by eliminating the last
    feature. When 2^q - 2 <= m_coalitions, all proper coalitions are
    enumerated and the estimate is exact.
    """
    X = np.asarray(X, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    if X.ndim != 2 or background.ndim != 2 or background.shape[0] == 0:
        raise ValidationError("X and background must be non-empty matrices")
    n, q = X.shape
    if background.shape[1] != q:
        raise ValidationError("background feature dimension mismatch")
    if m_coalitions < q + 2:
        raise ValidationError(f"m_coalitions={m_coalitions} < q+2={q + 2}")

    exhaustive = q <= 30 and 2**q - 2 <= m_coalitions
    if exhaustive:
        masks, weights = _all_coalitions(q)
    else:
        rng = rng_for(seed, "kernel-coalitions", n, q)
        masks, weights = _sampled_coalitions(q, m_coalitions, rng)
    base = float(np.mean(score_fn(background)))
    notes: list[str] = [] if exhaustive else ["sampled-coalitions"]

    n_masks = masks.shape[0]
    n_bg = background.shape[0]
    values = np.zeros((n, q))
    # design for constrained WLS: eliminate the last feature
    Z = masks[:, :-1] - masks[:, -1:]
    sw = np.sqrt(weights)
    design = Z * sw[:, None]
    for i in range(n):
        # composite rows: coalition members from x, the rest from background
        composite = np.where(
            np.repeat(masks, n_bg, axis=0) == 1.0,
            X[i][None, :],
            np.tile(background, (n_masks, 1)),
        )
        v = score_fn(composite).reshape(n_masks, n_bg).mean(axis=1)
        f_x = float(score_fn(X[i : i + 1])[0])
        target = (v - base - masks[:, -1] * (f_x - base)) * sw
        solution, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
        if rank < q - 1:
            gram = design.T @ design + 1e-8 * np.eye(q - 1)
            solution = np.linalg.solve(gram, design.T @ target)
            if "rank-deficient-ridge-fallback" not in notes:
                notes.append("rank-deficient-ridge-fallback")
                log.warning("kernel SHAP design rank-deficient; ridge fallback applied")
        values[i, :-1] = solution
        values[i, -1] = (f_x - base) - solution.sum()
    return AttributionMatrix(values, base, tuple(notes))


# ---------------------------------------------------------------------------
# ranking and overlap


def top_k_features(attr: AttributionMatrix, k: int) -> FeatureSet:
    """Rank by mean |phi| descending; ties to the lower index; truncate at k."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    mean_abs = attr.mean_abs()
    q = mean_abs.shape[0]
    order = np.lexsort((np.arange(q), -mean_abs))[: min(k, q)]
    return FeatureSet(
        indices=tuple(int(j) for j in order),
        mean_abs=tuple(float(mean_abs[j]) for j in order),
        k=k,
    )


def overlap_rates(sets: dict[str, FeatureSet]) -> OverlapReport:
    """Pairwise and global shared-feature fractions over equal-length sets.

    The denominator is the common set length min(k, q), so identical sets
    always score 1.0 even when q < k.
    """
    if len(sets) < 2:
        raise ValidationError("overlap_rates needs >= 2 datasets")
    lengths = {len(fs.indices) for fs in sets.values()}
    ks = {fs.k for fs in sets.values()}
    if len(lengths) != 1 or len(ks) != 1:
        raise ValidationError(f"inconsistent top-k sets: lengths {lengths}, k {ks}")
    denom = lengths.pop()
    tags = sorted(sets)
    pairwise = {}
    for a, b in itertools.combinations(tags, 2):
        shared = set(sets[a].indices) & set(sets[b].indices)
        pairwise[f"{a}|{b}"] = len(shared) / denom
    common = set(sets[tags[0]].indices)
    for tag in tags[1:]:
        common &= set(sets[tag].indices)
    return OverlapReport(dict(sets), pairwise, len(common) / denom)


def stratified_background(
    corpus: EmbeddingCorpus, class_name: str, size: int, seed: int
) -> np.ndarray:
    """Class-stratified background rows for kernel/linear attribution."""
    y = corpus.label_vector(class_name)
    size = min(size, len(corpus))
    n_pos = min(int(round(size * y.mean())), int(y.sum()))
    n_pos = max(n_pos, size - int((y == 0).sum()))
    rng = rng_for(seed, "background", corpus.manifest.dataset_tag, class_name)
    pos = rng.permutation(np.flatnonzero(y == 1))[:n_pos]
    neg = rng.permutation(np.flatnonzero(y == 0))[: size - n_pos]
    rows = np.sort(np.concatenate([pos, neg]))
    return corpus.features[rows].astype(np.float64)
