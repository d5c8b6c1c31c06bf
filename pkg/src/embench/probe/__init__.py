"""Linear-probe side of the benchmark: folds, classifiers, selection, reports."""

from .boosting import GradientBoostedTreesProbe
from .folds import FoldPlan, make_folds
from .linear import LogisticRegressionProbe
from .metrics import f1_score, median_iqr
from .mlp import MlpProbe
from .report import probe_report, render_probe_table
from .search import (
    DEFAULT_GRIDS,
    KIND_ORDER,
    BestSelection,
    ClassifierSpec,
    ProbeResult,
    grid_search_cv,
    select_best,
    select_overall_best,
    train,
)
from .trees import DecisionTreeProbe, RandomForestProbe, Tree, grow_tree

__all__ = [
    "BestSelection",
    "ClassifierSpec",
    "DEFAULT_GRIDS",
    "DecisionTreeProbe",
    "FoldPlan",
    "GradientBoostedTreesProbe",
    "KIND_ORDER",
    "LogisticRegressionProbe",
    "MlpProbe",
    "ProbeResult",
    "RandomForestProbe",
    "Tree",
    "f1_score",
    "grid_search_cv",
    "grow_tree",
    "make_folds",
    "median_iqr",
    "probe_report",
    "render_probe_table",
    "select_best",
    "select_overall_best",
    "train",
]
