"""CART trees and ensembles: decision tree, random forest.

One least-squares splitter serves every tree family. On binary 0/1
targets, minimizing the summed child SSE picks the same split as Gini
impurity (both reduce to maximizing (sum_L)^2/n_L + (sum_R)^2/n_R), so
classification trees are grown as regression trees on the labels and
leaves hold the class-1 fraction. Thresholds are midpoints between
adjacent distinct sorted values; ties break toward the lowest feature
index, then the lowest threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import ValidationError
from ..seeding import uint64_seed

_U64 = 0xFFFFFFFFFFFFFFFF


@njit(cache=True)
def _xorshift(state):
    s = state[0]
    s ^= (s << 13) & _U64
    s ^= s >> 7
    s ^= (s << 17) & _U64
    state[0] = s
    return s


@njit(cache=True)
def _sample_features(q, mtry, state, pool, out):
    """Partial Fisher-Yates draw of mtry distinct features, returned sorted."""
    for i in range(q):
        pool[i] = i
    for i in range(mtry):
        j = i + _xorshift(state) % (q - i)
        pool[i], pool[j] = pool[j], pool[i]
    out[:mtry] = np.sort(pool[:mtry])


@njit(cache=True)
def _build_sse_tree(X, t, samples, max_depth, mtry, rng_state):
    """Grow one least-squares CART; returns packed node arrays.

    samples may contain repeats (bootstrap). Nodes are laid out in
    DFS-discovery order; feature = -1 marks a leaf. cover counts the
    training rows (with multiplicity) reaching each node.
    """
    n = samples.shape[0]
    q = X.shape[1]
    cap = 2 ** (max_depth + 1)
    if cap > 4 * n + 1:
        cap = 4 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap, np.float64)
    cover = np.zeros(cap, np.float64)

    work = samples.copy()
    pool = np.empty(q, np.int64)
    feats = np.empty(q, np.int64)
    stack = np.empty((cap, 4), np.int64)  # node, start, end, depth
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        m = end - start

        sum_t = 0.0
        sum_t2 = 0.0
        for ii in range(start, end):
            tv = t[work[ii]]
            sum_t += tv
            sum_t2 += tv * tv
        value[node] = sum_t / m
        cover[node] = m
        node_sse = sum_t2 - sum_t * sum_t / m
        if depth >= max_depth or m < 2 or node_sse <= 1e-12:
            continue

        if mtry < q:
            _sample_features(q, mtry, rng_state, pool, feats)
            n_feats = mtry
        else:
            for i in range(q):
                feats[i] = i
            n_feats = q

        # a split must strictly beat the parent's (sum)^2/n term
        best_gain = sum_t * sum_t / m + 1e-12
        best_f = -1
        best_thr = 0.0
        v = np.empty(m, np.float64)
        tv_arr = np.empty(m, np.float64)
        for fi in range(n_feats):
            f = feats[fi]
            for ii in range(m):
                v[ii] = X[work[start + ii], f]
                tv_arr[ii] = t[work[start + ii]]
            order = np.argsort(v, kind="mergesort")
            sl = 0.0
            for pos in range(m - 1):
                o = order[pos]
                sl += tv_arr[o]
                if v[o] == v[order[pos + 1]]:
                    continue
                nl = pos + 1
                nr = m - nl
                sr = sum_t - sl
                gain = sl * sl / nl + sr * sr / nr
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_thr = (v[o] + v[order[pos + 1]]) / 2.0
        if best_f < 0:
            continue

        seg = work[start:end].copy()
        il = start
        for ii in range(m):
            if X[seg[ii], best_f] <= best_thr:
                work[il] = seg[ii]
                il += 1
        ir = il
        for ii in range(m):
            if X[seg[ii], best_f] > best_thr:
                work[ir] = seg[ii]
                ir += 1

        feature[node] = best_f
        threshold[node] = best_thr
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        left[node] = lid
        right[node] = rid
        stack[top, 0] = lid
        stack[top, 1] = start
        stack[top, 2] = il
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = rid
        stack[top, 1] = il
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        cover[:n_nodes].copy(),
    )


@njit(cache=True)
def _predict_tree(feature, threshold, left, right, value, X):
    out = np.empty(X.shape[0], np.float64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


@njit(cache=True)
def _leaf_index(feature, threshold, left, right, X):
    out = np.empty(X.shape[0], np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@dataclass
class Tree:
    """Packed CART node arrays; feature = -1 marks leaves."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    cover: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _predict_tree(self.feature, self.threshold, self.left, self.right,
                             self.value, np.ascontiguousarray(X, np.float64))

    def leaf_of(self, X: np.ndarray) -> np.ndarray:
        return _leaf_index(self.feature, self.threshold, self.left, self.right,
                           np.ascontiguousarray(X, np.float64))

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def depth(self) -> int:
        d = np.zeros(len(self.feature), np.int64)
        for node in range(len(self.feature)):
            if self.feature[node] >= 0:
                d[self.left[node]] = d[node] + 1
                d[self.right[node]] = d[node] + 1
        return int(d.max())


def _check_training_inputs(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValidationError(f"X/y shape mismatch: {X.shape} vs {y.shape}")
    if X.shape[0] < 2:
        raise ValidationError("need at least 2 training samples")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise ValidationError("non-finite training inputs")
    if len(np.unique(y)) < 2:
        raise ValidationError("training labels are single-class")
    return X, y


def grow_tree(
    X: np.ndarray,
    targets: np.ndarray,
    samples: np.ndarray,
    max_depth: int,
    mtry: int | None = None,
    rng_key: int = 1,
) -> Tree:
    """Python-facing wrapper around the numba builder."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    samples = np.ascontiguousarray(samples, dtype=np.int64)
    q = X.shape[1]
    mtry = q if mtry is None else min(mtry, q)
    state = np.array([rng_key | 1], dtype=np.uint64)
    return Tree(*_build_sse_tree(X, targets, samples, max_depth, mtry, state))


class DecisionTreeProbe:
    """Single CART classifier; leaf values are class-1 fractions."""

    kind = "decision_tree"

    def __init__(self, max_depth: int = 6, seed: int = 0):
        self.max_depth = max_depth
        self.seed = seed
        self.tree: Tree | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "DecisionTreeProbe":
        X, y = _check_training_inputs(X, y)
        self.tree = grow_tree(X, y, np.arange(X.shape[0], dtype=np.int64), self.max_depth)
        return self

    def predict_score(self, X: np.ndarray) -> np.ndarray:
        return self.tree.predict(X)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_score(X) >= 0.5).astype(np.int64)

    # attribution-facing view: probabilities are the additive tree output
    @property
    def shap_trees(self) -> list[Tree]:
        return [self.tree]

    shap_tree_weight = 1.0
    shap_base_offset = 0.0

    def attribution_score(self, X: np.ndarray) -> np.ndarray:
        return self.predict_score(X)


class RandomForestProbe:
    """Bagged CART ensemble with per-split feature subsampling."""

    kind = "random_forest"

    def __init__(self, n_trees: int = 100, max_depth: int = 10, seed: int = 0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.seed = seed
        self.trees: list[Tree] = []

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RandomForestProbe":
        X, y = _check_training_inputs(X, y)
        n, q = X.shape
        mtry = math.ceil(math.sqrt(q))
        rng = np.random.default_rng(uint64_seed(self.seed, "rf-bootstrap"))
        boot = rng.integers(0, n, size=(self.n_trees, n))
        self.trees = [
            grow_tree(X, y, boot[t], self.max_depth, mtry=mtry,
                      rng_key=uint64_seed(self.seed, "rf-mtry", t))
            for t in range(self.n_trees)
        ]
        return self

    def predict_score(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, np.float64)
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        return total / self.n_trees

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_score(X) >= 0.5).astype(np.int64)

    @property
    def shap_trees(self) -> list[Tree]:
        return self.trees

    @property
    def shap_tree_weight(self) -> float:
        return 1.0 / self.n_trees

    shap_base_offset = 0.0

    def attribution_score(self, X: np.ndarray) -> np.ndarray:
        return self.predict_score(X)
