"""Synthetic gradient-descent lab for the grouping objective.

Random meta-features are drawn for the categories of a grouping table and
pushed downhill on the grouping loss with fixed-step gradient descent. The
trace records the intra-group spread of each group and the smallest
between-group gaps, so the compaction/separation behaviour can be inspected.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .grouping import (
    GroupingParams,
    GroupingTable,
    MetaFeatureSet,
    group_stats,
    re_meta_loss,
    separation_gaps,
)
from .losses import ClassScores, LossWeights, TclParams, combined_loss, tcl_loss
from .numerics import InvalidInputError


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    grouping: GroupingTable = field(default_factory=GroupingTable.default)
    n_categories: int = None
    feature_dim: int = 64
    grouping_params: GroupingParams = GroupingParams()
    step_size: float = 1e-2
    iterations: int = 500
    seed: int = 0
    init_sigma: float = 1.0
    # when set, the traced loss is the weighted sum with a TCL term on
    # synthetic scores (localization term fixed at 0)
    weights: LossWeights = None

    def __post_init__(self):
        n = len(self.grouping.categories)
        if self.n_categories is None:
            object.__setattr__(self, "n_categories", n)
        elif self.n_categories != n:
            raise InvalidInputError(
                f"n_categories={self.n_categories} but the grouping table lists {n} categories"
            )
        if self.feature_dim < 2:
            raise InvalidInputError("feature_dim must be at least 2")
        if not self.step_size >= 0:
            raise InvalidInputError("step_size must be nonnegative")
        if self.iterations < 0:
            raise InvalidInputError("iterations must be nonnegative")
        if not self.init_sigma >= 0:
            raise InvalidInputError("init_sigma must be nonnegative")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    loss: float
    w_mean_std: tuple
    min_mean_gap: float
    min_std_gap: float


def init_features(cfg: SimConfig) -> MetaFeatureSet:
    rng = np.random.default_rng(cfg.seed)
    x = rng.normal(0.0, cfg.init_sigma, size=(cfg.n_categories, cfg.feature_dim))
    return MetaFeatureSet(cfg.grouping.categories, x)


def _synthetic_scores(cfg: SimConfig):
    # one sample per category, drawn after the features from its own stream
    rng = np.random.default_rng([cfg.seed, 1])
    n = cfg.n_categories
    return [ClassScores(rng.uniform(0.0, 1.0, size=n), i) for i in range(n)]


def _row(it, loss, x, t):
    stats = group_stats(x, t)
    dmean, dstd = separation_gaps(stats)
    return TraceRow(it, loss, tuple(s.w_mean_std for s in stats), dmean, dstd)


def descend(cfg: SimConfig, x0: MetaFeatureSet = None):
    """Run gradient descent; return ``(trace, final_features)``.

    The trace holds the starting point (iteration 0) followed by one row
    per update.
    """
    x = init_features(cfg) if x0 is None else x0
    t = cfg.grouping
    p = cfg.grouping_params
    cls_value = 0.0
    if cfg.weights is not None:
        cls_value = sum(tcl_loss(s, TclParams()).value for s in _synthetic_scores(cfg))
    scale = 1.0 if cfg.weights is None else cfg.weights.omega

    trace = []
    feats = np.array(x.features)
    # overflow surfaces as a non-finite loss or update and aborts the run
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(cfg.iterations + 1):
            current = x if it == 0 else MetaFeatureSet(x.categories, feats)
            g = re_meta_loss(current, t, p)
            loss = g.value
            if cfg.weights is not None:
                loss = combined_loss(cls_value, g.value, 0.0, cfg.weights)
            if not math.isfinite(loss):
                raise DivergenceError(f"non-finite loss at iteration {it}")
            trace.append(_row(it, loss, current, t))
            if it == cfg.iterations:
                break
            feats = feats - cfg.step_size * scale * g.gradient.reshape(feats.shape)
            if not np.all(np.isfinite(feats)):
                raise DivergenceError(f"non-finite features after iteration {it + 1}")
    return trace, current


def run_descent(cfg: SimConfig):
    return descend(cfg)[0]


def histogram(x: MetaFeatureSet, bins: int, value_range):
    """Per-category counts over ``bins`` uniform bins on ``value_range``.

    Bins are half-open except the last, which includes the upper edge.
    Entries outside the range are counted in the nearest edge bin.
    Returns an ``(N, bins)`` integer array.
    """
    lo, hi = (float(v) for v in value_range)
    if bins < 1:
        raise InvalidInputError("bins must be at least 1")
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise InvalidInputError(f"invalid histogram range [{lo}, {hi}]")
    width = (hi - lo) / bins
    idx = np.floor((x.features - lo) / width).astype(np.int64)
    idx = np.clip(idx, 0, bins - 1)
    counts = np.zeros((x.n_categories, bins), dtype=np.int64)
    for i in range(x.n_categories):
        counts[i] = np.bincount(idx[i], minlength=bins)
    return counts


def bin_edges(bins, value_range):
    lo, hi = (float(v) for v in value_range)
    return np.linspace(lo, hi, bins + 1)
