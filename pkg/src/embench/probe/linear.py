"""L2-regularized logistic regression via L-BFGS-B.

Features are standardized internally for conditioning; the exposed
coef_/intercept_ are mapped back to raw feature space so attribution
can work directly on unstandardized inputs.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from ..errors import StageError
from .trees import _check_training_inputs


def _log1pexp(z: np.ndarray) -> np.ndarray:
    # numerically stable log(1 + e^z)
    out = np.empty_like(z)
    hi = z > 30
    out[hi] = z[hi]
    out[~hi] = np.log1p(np.exp(z[~hi]))
    return out


class LogisticRegressionProbe:
    kind = "logistic_regression"

    def __init__(self, l2: float = 0.1, seed: int = 0, max_iter: int = 500):
        self.l2 = l2
        self.seed = seed  # unused: the optimization is deterministic
        self.max_iter = max_iter
        self.coef_: np.ndarray | None = None
        self.intercept_: float = 0.0

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LogisticRegressionProbe":
        X, y = _check_training_inputs(X, y)
        n, q = X.shape
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std > 1e-12, std, 1.0)
        Xs = (X - mean) / std

        def objective(params):
            w, b = params[:q], params[q]
            margin = Xs @ w + b
            loss = (_log1pexp(margin) - y * margin).mean() + 0.5 * self.l2 * (w @ w)
            p = 0.5 * (1.0 + np.tanh(0.5 * margin))
            grad_margin = (p - y) / n
            grad_w = Xs.T @ grad_margin + self.l2 * w
            grad_b = grad_margin.sum()
            return loss, np.concatenate([grad_w, [grad_b]])

        result = minimize(
            objective,
            np.zeros(q + 1),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": self.max_iter, "ftol": 1e-12, "gtol": 1e-9},
        )
        if not np.isfinite(result.x).all():
            raise StageError("probe", "logistic regression diverged to non-finite weights")
        w_std, b_std = result.x[:q], result.x[q]
        self.coef_ = w_std / std
        self.intercept_ = float(b_std - (w_std * mean / std).sum())
        return self

    def predict_margin(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, np.float64) @ self.coef_ + self.intercept_

    def predict_score(self, X: np.ndarray) -> np.ndarray:
        return 0.5 * (1.0 + np.tanh(0.5 * self.predict_margin(X)))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_score(X) >= 0.5).astype(np.int64)
