"""Single-hidden-layer ReLU network trained with Adam on cross-entropy.

Fixed recipe: Adam at 1e-3 (default moments), 200 epochs, batch 32,
internal standardization, seeded init and shuffling — deterministic
for a fixed seed.
"""

from __future__ import annotations

import numpy as np

from ..seeding import rng_for
from .trees import _check_training_inputs


class MlpProbe:
    kind = "mlp"

    def __init__(self, hidden: int = 32, seed: int = 0, epochs: int = 200,
                 batch_size: int = 32, learning_rate: float = 1e-3):
        self.hidden = hidden
        self.seed = seed
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self._params: list[np.ndarray] | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "MlpProbe":
        X, y = _check_training_inputs(X, y)
        n, q = X.shape
        self._mean = X.mean(axis=0)
        std = X.std(axis=0)
        self._std = np.where(std > 1e-12, std, 1.0)
        Xs = (X - self._mean) / self._std

        rng = rng_for(self.seed, "mlp-init", self.hidden)
        W1 = rng.standard_normal((q, self.hidden)) * np.sqrt(2.0 / q)
        b1 = np.zeros(self.hidden)
        W2 = rng.standard_normal((self.hidden, 1)) * np.sqrt(1.0 / self.hidden)
        b2 = np.zeros(1)
        params = [W1, b1, W2, b2]
        moment1 = [np.zeros_like(p) for p in params]
        moment2 = [np.zeros_like(p) for p in params]
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        step = 0

        shuffle_rng = rng_for(self.seed, "mlp-shuffle", self.hidden)
        for _ in range(self.epochs):
            order = shuffle_rng.permutation(n)
            for lo in range(0, n, self.batch_size):
                batch = order[lo : lo + self.batch_size]
                xb, yb = Xs[batch], y[batch]
                m = len(batch)

                h_pre = xb @ W1 + b1
                h = np.maximum(h_pre, 0.0)
                margin = (h @ W2 + b2).ravel()
                p = 0.5 * (1.0 + np.tanh(0.5 * margin))

                d_margin = ((p - yb) / m)[:, None]
                gW2 = h.T @ d_margin
                gb2 = d_margin.sum(axis=0)
                dh = d_margin @ W2.T
                dh[h_pre <= 0.0] = 0.0
                gW1 = xb.T @ dh
                gb1 = dh.sum(axis=0)

                step += 1
                for p_i, g in zip(range(4), (gW1, gb1, gW2, gb2)):
                    moment1[p_i] = beta1 * moment1[p_i] + (1 - beta1) * g
                    moment2[p_i] = beta2 * moment2[p_i] + (1 - beta2) * g * g
                    m_hat = moment1[p_i] / (1 - beta1**step)
                    v_hat = moment2[p_i] / (1 - beta2**step)
                    params[p_i] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
                W1, b1, W2, b2 = params

        self._params = params
        return self

    def predict_score(self, X: np.ndarray) -> np.ndarray:
        W1, b1, W2, b2 = self._params
        Xs = (np.asarray(X, np.float64) - self._mean) / self._std
        h = np.maximum(Xs @ W1 + b1, 0.0)
        margin = (h @ W2 + b2).ravel()
        return 0.5 * (1.0 + np.tanh(0.5 * margin))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_score(X) >= 0.5).astype(np.int64)
