"""Least-squares fit of the low-dimensional similarity curve ψ."""

from __future__ import annotations

import numpy as np
from scipy.optimize import curve_fit

from ..errors import StageError, ValidationError

CURVE_GRID_POINTS = 300


def _psi(d: np.ndarray, a: float, b: float) -> np.ndarray:
    return 1.0 / (1.0 + a * d ** (2.0 * b))


def curve_target(min_dist: float, spread: float) -> tuple[np.ndarray, np.ndarray]:
    """Fixed 300-point grid on [0, 3·spread] and the piecewise target."""
    grid = np.linspace(0.0, 3.0 * spread, CURVE_GRID_POINTS)
    target = np.where(grid <= min_dist, 1.0,
                      np.exp(-(grid - min_dist) / spread))
    return grid, target


def fit_curve(min_dist: float, spread: float) -> tuple[float, float]:
    """(a, b) minimizing Σ (ψ(d) − target(d))² over the fixed grid."""
    if spread <= 0:
        raise ValidationError(f"spread must be positive, got {spread}")
    if min_dist < 0:
        raise ValidationError(f"min_dist must be non-negative, got {min_dist}")
    grid, target = curve_target(min_dist, spread)
    try:
        params, _ = curve_fit(_psi, grid, target, p0=(1.0, 1.0),
                              bounds=([0.0, 0.0], [np.inf, np.inf]),
                              maxfev=10_000)
    except RuntimeError as exc:
        raise StageError(
            "fit_curve",
            f"curve fit did not converge for min_dist={min_dist}, "
            f"spread={spread}: {exc}",
        ) from exc
    a, b = float(params[0]), float(params[1])
    if not (np.isfinite(a) and np.isfinite(b) and a > 0 and b > 0):
        raise StageError(
            "fit_curve",
            f"curve fit returned non-positive parameters a={a}, b={b} "
            f"for min_dist={min_dist}, spread={spread}",
        )
    return a, b
