"""Top-C classification loss and category-based grouping loss."""

from .numerics import (
    GradedValue,
    InvalidInputError,
    VectorStats,
    finite_diff_gradient,
    relative_gradient_error,
    vector_stats,
)
from .losses import (
    ClassScores,
    LossWeights,
    TclParams,
    bce_loss,
    combined_loss,
    cross_entropy_loss,
    focal_loss,
    tcl2_loss,
    tcl_loss,
    top_false_classes,
)
from .grouping import (
    GroupingParams,
    GroupingTable,
    GroupStats,
    MetaFeatureSet,
    group_loss,
    group_stats,
    pairwise_term,
    re_meta_loss,
)

__version__ = "0.1.0"
