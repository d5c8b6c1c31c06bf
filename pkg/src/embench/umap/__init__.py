"""From-scratch UMAP: graph, bandwidths, curve fit, layout, and plots."""

from .curve import CURVE_GRID_POINTS, curve_target, fit_curve
from .graph import (
    Bandwidths,
    FuzzyGraph,
    NeighborGraph,
    SIGMA_LOWER,
    SIGMA_UPPER,
    fuzzy_simplicial_set,
    knn_graph,
    smooth_bandwidths,
)
from .layout import (
    DEFAULT_SWEEP,
    UmapLayout,
    UmapParams,
    embed,
    optimize_layout,
)
from .plot import emit_bars, emit_scatter

__all__ = [
    "Bandwidths",
    "CURVE_GRID_POINTS",
    "DEFAULT_SWEEP",
    "FuzzyGraph",
    "NeighborGraph",
    "SIGMA_LOWER",
    "SIGMA_UPPER",
    "UmapLayout",
    "UmapParams",
    "curve_target",
    "embed",
    "emit_bars",
    "emit_scatter",
    "fit_curve",
    "fuzzy_simplicial_set",
    "knn_graph",
    "optimize_layout",
    "smooth_bandwidths",
]
