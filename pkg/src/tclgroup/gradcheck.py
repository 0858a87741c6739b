"""Certify analytic gradients against central differences.

Points where a loss is not differentiable are reported as skipped rather
than failed: ties in the top-C selection, scores on a log-clamp boundary,
and zero-variance vectors or zero-spread groups in the grouping objective.
"""

from dataclasses import dataclass

import numpy as np

from . import losses
from .grouping import (
    GroupingParams,
    GroupingTable,
    MetaFeatureSet,
    group_stats,
    re_meta_loss,
    re_meta_value_fn,
)
from .numerics import finite_diff_gradient, relative_gradient_error

TOLERANCE = 1e-5
STEP = 1e-5


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float = float("nan")
    skipped: str = None

    def passed(self, tol=TOLERANCE):
        return self.skipped is None and self.error < tol


def classification_loss(name, scores, params=losses.TclParams()):
    if name == "tcl":
        return losses.tcl_loss(scores, params)
    if name == "tcl2":
        return losses.tcl2_loss(scores, params)
    if name == "bce":
        return losses.bce_loss(scores)
    if name == "focal":
        return losses.focal_loss(scores)
    if name == "ce":
        return losses.cross_entropy_loss(scores)
    raise ValueError(f"unknown classification loss {name!r}")


def classification_singularity(name, scores, params, h=STEP):
    """Reason the loss is non-smooth within ``h`` of ``scores``, else None."""
    s = scores.scores
    if name in ("tcl", "tcl2"):
        false = np.sort(np.delete(s, scores.true_label))[::-1]
        # the selected ranks plus the first unselected one must be separated
        head = false[:min(params.c, false.size)]
        if head.size > 1 and np.min(-np.diff(head)) <= 2 * h:
            return "tie in top-C false-class selection"
    if name in ("bce", "focal"):
        if np.any((s < losses.LOG_EPS + h) | (s > 1.0 - losses.LOG_EPS - h)):
            return "score on log-clamp boundary"
    if np.any((s - h < 0.0) | (s + h > 1.0)):
        return "score within one step of the [0, 1] boundary"
    return None


def check_classification(name, scores, params=losses.TclParams(), h=STEP,
                         corrupt=False):
    reason = classification_singularity(name, scores, params, h)
    if reason:
        return CheckResult(name, skipped=reason)
    label = scores.true_label

    def f(v):
        return classification_loss(name, losses.ClassScores(v, label), params).value

    analytic = np.array(classification_loss(name, scores, params).gradient)
    if corrupt:
        analytic[0] += 1e-3
    numeric = finite_diff_gradient(f, scores.scores, h)
    return CheckResult(name, relative_gradient_error(analytic, numeric))


def grouping_singularity(x: MetaFeatureSet, t: GroupingTable, floor=1e-6):
    for s_i, name in zip(np.std(x.features, axis=1), x.categories):
        if s_i < floor:
            return f"zero-variance vector for category {name!r}"
    # a singleton's spread is identically zero, which is smooth
    for j, st in enumerate(group_stats(x, t), start=1):
        if st.size > 1 and st.w_mean_std < floor:
            return f"zero intra-group spread in group {j}"
        if st.size > 1 and st.w_std < floor:
            return f"identical member deviations in group {j}"
    return None


def check_grouping(x, t, p=GroupingParams(), h=STEP, corrupt=False):
    reason = grouping_singularity(x, t)
    if reason:
        return CheckResult(p.strategy, skipped=reason)
    analytic = np.array(re_meta_loss(x, t, p).gradient)
    if corrupt:
        analytic[0] += 1e-3
    numeric = finite_diff_gradient(re_meta_value_fn(x, t, p), x.features.ravel(), h)
    return CheckResult(p.strategy, relative_gradient_error(analytic, numeric))


def random_instance(seed, t: GroupingTable = None, feature_dim=64):
    """Seeded features for every category of ``t`` plus one score vector.

    Per-category offsets and scales keep the group statistics well away from
    the singular sets.
    """
    t = GroupingTable.default() if t is None else t
    rng = np.random.default_rng(seed)
    n = len(t.categories)
    feats = (rng.normal(size=(n, feature_dim)) * rng.uniform(0.5, 2.0, size=(n, 1))
             + rng.normal(size=(n, 1)))
    scores = losses.ClassScores(rng.uniform(0.01, 0.99, size=n), int(rng.integers(n)))
    return MetaFeatureSet(t.categories, feats), scores
