"""Grid-search cross-validation and classifier selection.

Selection uses one total order everywhere: higher median F1, then lower
IQR, then the fixed family order, then the canonical hyperparameter
string. Training seeds are derived from hyperparameter *content*, so
duplicated grid points train identically and cannot change the winner.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..corpus import EmbeddingCorpus
from ..errors import ValidationError
from ..seeding import derive_key
from .boosting import GradientBoostedTreesProbe
from .folds import FoldPlan
from .linear import LogisticRegressionProbe
from .metrics import f1_score, median_iqr
from .mlp import MlpProbe
from .trees import DecisionTreeProbe, RandomForestProbe

KIND_ORDER = (
    "logistic_regression",
    "decision_tree",
    "random_forest",
    "gradient_boosted_trees",
    "mlp",
)

MODEL_CLASSES = {
    "logistic_regression": LogisticRegressionProbe,
    "decision_tree": DecisionTreeProbe,
    "random_forest": RandomForestProbe,
    "gradient_boosted_trees": GradientBoostedTreesProbe,
    "mlp": MlpProbe,
}

DEFAULT_GRIDS: dict[str, list[dict]] = {
    "logistic_regression": [{"l2": 0.01}, {"l2": 0.1}, {"l2": 1.0}],
    "decision_tree": [{"max_depth": 3}, {"max_depth": 6}, {"max_depth": 10}],
    "random_forest": [
        {"n_trees": 100, "max_depth": 6},
        {"n_trees": 100, "max_depth": 10},
    ],
    "gradient_boosted_trees": [
        {"n_rounds": 100, "learning_rate": 0.1, "max_depth": 3},
        {"n_rounds": 100, "learning_rate": 0.3, "max_depth": 3},
    ],
    "mlp": [{"hidden": 32}, {"hidden": 64}],
}


@dataclass
class ClassifierSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KIND_ORDER:
            raise ValidationError(f"unknown classifier kind {self.kind!r}")

    def canonical(self) -> str:
        return json.dumps(self.params, sort_keys=True)


@dataclass
class ProbeResult:
    spec: ClassifierSpec
    per_fold_f1: list[float]
    median_f1: float
    iqr: float

    @classmethod
    def from_scores(cls, spec: ClassifierSpec, scores) -> "ProbeResult":
        median, iqr = median_iqr(scores)
        return cls(spec, [float(s) for s in scores], median, iqr)

    def to_dict(self) -> dict:
        return {
            "kind": self.spec.kind,
            "params": self.spec.params,
            "per_fold_f1": self.per_fold_f1,
            "median_f1": self.median_f1,
            "iqr": self.iqr,
        }


@dataclass
class BestSelection:
    per_dataset: dict[str, ProbeResult]
    overall_tag: str
    overall: ProbeResult


def train(spec: ClassifierSpec, X: np.ndarray, y: np.ndarray, seed: int):
    """Fit one classifier; deterministic for fixed (spec, data, seed)."""
    model = MODEL_CLASSES[spec.kind](**spec.params, seed=seed)
    return model.fit(X, y)


def _sort_key(result: ProbeResult, dataset_tag: str = ""):
    return (
        -result.median_f1,
        result.iqr,
        KIND_ORDER.index(result.spec.kind),
        result.spec.canonical(),
        dataset_tag,
    )


def grid_search_cv(
    corpus: EmbeddingCorpus,
    class_name: str,
    kind: str,
    grid: list[dict],
    folds: FoldPlan,
    seed: int,
) -> ProbeResult:
    """Cross-validate every grid point; return the best one with its scores."""
    if not grid:
        raise ValidationError("hyperparameter grid is empty")
    if not corpus.is_pooled:
        raise ValidationError("probing requires a pooled corpus")
    X = corpus.features.astype(np.float64)
    y = corpus.label_vector(class_name).astype(np.float64)
    results = []
    for params in grid:
        spec = ClassifierSpec(kind, dict(params))
        scores = []
        for fold in range(folds.k):
            tr, te = folds.train_indices(fold), folds.test_indices(fold)
            fit_seed = derive_key(seed, "train", kind, spec.canonical(), fold)
            model = train(spec, X[tr], y[tr], fit_seed)
            scores.append(f1_score(model.predict(X[te]), y[te].astype(np.int64)))
        results.append(ProbeResult.from_scores(spec, scores))
    return select_best(results)


def select_best(results: list[ProbeResult]) -> ProbeResult:
    """Argmax median F1; ties -> min IQR -> family order -> canonical params."""
    if not results:
        raise ValidationError("select_best on empty result list")
    return min(results, key=_sort_key)


def select_overall_best(per_dataset: dict[str, ProbeResult]) -> BestSelection:
    """Best across datasets; records the winning dataset tag."""
    if not per_dataset:
        raise ValidationError("select_overall_best on empty map")
    tag = min(per_dataset, key=lambda t: _sort_key(per_dataset[t], t))
    return BestSelection(dict(per_dataset), tag, per_dataset[tag])
