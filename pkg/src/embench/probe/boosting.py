"""Gradient-boosted CART ensemble with logistic loss.

Each round grows a least-squares tree on the residuals y - p, then
replaces leaf values with the Newton step sum(y - p) / sum(p(1 - p))
scaled by the learning rate. Model output is additive in margin space:
F(x) = base_margin + sum of tree outputs.
"""

from __future__ import annotations

import numpy as np

from .trees import Tree, _check_training_inputs, grow_tree


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class GradientBoostedTreesProbe:
    kind = "gradient_boosted_trees"

    def __init__(self, n_rounds: int = 100, learning_rate: float = 0.1,
                 max_depth: int = 3, seed: int = 0):
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.seed = seed
        self.trees: list[Tree] = []
        self.base_margin = 0.0

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GradientBoostedTreesProbe":
        X, y = _check_training_inputs(X, y)
        n = X.shape[0]
        p_bar = min(max(float(y.mean()), 1e-6), 1.0 - 1e-6)
        self.base_margin = float(np.log(p_bar / (1.0 - p_bar)))
        margin = np.full(n, self.base_margin)
        all_rows = np.arange(n, dtype=np.int64)
        self.trees = []
        for _ in range(self.n_rounds):
            p = _sigmoid(margin)
            residual = y - p
            hessian = p * (1.0 - p)
            tree = grow_tree(X, residual, all_rows, self.max_depth)
            leaves = tree.leaf_of(X)
            for leaf in np.unique(leaves):
                members = leaves == leaf
                step = residual[members].sum() / (hessian[members].sum() + 1e-16)
                tree.value[leaf] = self.learning_rate * step
            margin += tree.value[leaves]
            self.trees.append(tree)
        return self

    def predict_margin(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, np.float64)
        margin = np.full(X.shape[0], self.base_margin)
        for tree in self.trees:
            margin += tree.predict(X)
        return margin

    def predict_score(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.predict_margin(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_score(X) >= 0.5).astype(np.int64)

    # attribution-facing view: GBT is additive in margin space
    @property
    def shap_trees(self) -> list[Tree]:
        return self.trees

    shap_tree_weight = 1.0

    @property
    def shap_base_offset(self) -> float:
        return self.base_margin

    def attribution_score(self, X: np.ndarray) -> np.ndarray:
        return self.predict_margin(X)
