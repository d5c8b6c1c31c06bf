"""F1 and fold-score summary statistics."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError


def f1_score(predictions: np.ndarray, truth: np.ndarray) -> float:
    """Binary F1 = 2TP / (2TP + FP + FN); 0 when the denominator is 0."""
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape:
        raise ValidationError(
            f"prediction/truth length mismatch: {predictions.shape} vs {truth.shape}"
        )
    tp = int(((predictions == 1) & (truth == 1)).sum())
    fp = int(((predictions == 1) & (truth == 0)).sum())
    fn = int(((predictions == 0) & (truth == 1)).sum())
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 0.0
    return 2 * tp / denom


def median_iqr(scores) -> tuple[float, float]:
    """Median and interquartile range (Q3 - Q1, linear-interpolated quartiles)."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValidationError("cannot summarize an empty score list")
    q1, q2, q3 = np.percentile(scores, [25, 50, 75])
    return float(q2), float(q3 - q1)
