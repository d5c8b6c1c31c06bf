"""embench: two-sided benchmarking of frozen embedding corpora.

Probes pooled embeddings with shallow classifiers (linear-probe side) and
inspects the representations themselves via feature attribution, cluster
geometry, and 2-D projection (representation-level side).
"""

from .corpus import (
    DEFAULT_LABEL_MAPPINGS,
    SIZE_TIERS,
    CorpusManifest,
    EmbeddingCorpus,
    LabelMapping,
    SizeTier,
    balanced_subsample,
    load_corpus,
    map_labels,
    pool,
    pool_corpus,
    subset_by_tier,
    write_corpus,
)
from .errors import (
    BenchError,
    FoldInfeasibleError,
    StageError,
    TierUnsatisfiableError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "BenchError",
    "CorpusManifest",
    "DEFAULT_LABEL_MAPPINGS",
    "EmbeddingCorpus",
    "FoldInfeasibleError",
    "LabelMapping",
    "SIZE_TIERS",
    "SizeTier",
    "StageError",
    "TierUnsatisfiableError",
    "ValidationError",
    "balanced_subsample",
    "load_corpus",
    "map_labels",
    "pool",
    "pool_corpus",
    "subset_by_tier",
    "write_corpus",
]
