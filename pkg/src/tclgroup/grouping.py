"""Category-based grouping objective over per-category meta-feature vectors.

Each category contributes a feature vector; its mean ``u_i`` and population
std ``delta_i`` are summarized per group into

* ``w_mean``      mean of member ``u_i``  (group concentration)
* ``w_std``       population std of member ``delta_i`` (or ``delta_i`` for a
                  singleton group)  (group dispersion)
* ``w_mean_std``  population std of member ``u_i``  (intra-group spread)

The loss rewards small intra-group spread and large differences of
``w_mean``/``w_std`` between groups. Group order matters: group ``j`` is
only compared against groups ``k > j``.
"""

from dataclasses import dataclass
from importlib import resources
import math

import numpy as np

from .numerics import DEFAULT_FEATURE_DIM, GradedValue, InvalidInputError

ZERO_SPREAD = 1e-12

VOC_GROUPS = (
    ("aero", "bird"),
    ("cow", "horse", "cat", "sheep", "dog"),
    ("sofa", "chair"),
    ("tv", "plant", "table"),
    ("boat", "bicycle", "train", "car", "bus", "mbike"),
    ("bottle", "person"),
)

VOC_CATEGORIES = tuple(name for group in VOC_GROUPS for name in group)

S_BEST = "S-BEST"
S_STD_ONLY = "S-STD-ONLY"
S_STD_MEAN = "S-STD-MEAN"
S_INTRA_STD = "S-INTRA-STD"
STRATEGIES = (S_BEST, S_STD_ONLY, S_STD_MEAN, S_INTRA_STD)

# strategy -> (numerator/penalty use the intra-group spread, pairwise term includes w_mean)
_STRATEGY_PARTS = {
    S_BEST: (True, True),
    S_STD_ONLY: (False, False),
    S_STD_MEAN: (False, True),
    S_INTRA_STD: (True, False),
}


@dataclass(frozen=True)
class MetaFeatureSet:
    categories: tuple
    features: np.ndarray

    def __post_init__(self):
        cats = tuple(str(c) for c in self.categories)
        feats = np.array(self.features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] != len(cats):
            raise InvalidInputError(
                f"features must be an N x |F| matrix with N={len(cats)} rows"
            )
        if len(cats) < 1 or feats.shape[1] < 1:
            raise InvalidInputError("need at least one category and one feature")
        if len(set(cats)) != len(cats):
            raise InvalidInputError("category names must be unique")
        if not np.all(np.isfinite(feats)):
            raise InvalidInputError("features must be finite")
        feats.setflags(write=False)
        object.__setattr__(self, "categories", cats)
        object.__setattr__(self, "features", feats)

    @property
    def n_categories(self):
        return len(self.categories)

    @property
    def feature_dim(self):
        return self.features.shape[1]

    @classmethod
    def zeros(cls, categories=None, feature_dim=DEFAULT_FEATURE_DIM):
        categories = VOC_CATEGORIES if categories is None else categories
        return cls(categories, np.zeros((len(categories), feature_dim)))


@dataclass(frozen=True)
class GroupingTable:
    groups: tuple

    def __post_init__(self):
        groups = tuple(tuple(str(n) for n in g) for g in self.groups)
        if not groups:
            raise InvalidInputError("grouping table needs at least one group")
        seen = set()
        for g in groups:
            if not g:
                raise InvalidInputError("groups must be nonempty")
            for name in g:
                if name in seen:
                    raise InvalidInputError(f"category {name!r} appears in more than one group")
                seen.add(name)
        object.__setattr__(self, "groups", groups)

    @property
    def k(self):
        return len(self.groups)

    @property
    def categories(self):
        return tuple(n for g in self.groups for n in g)

    @classmethod
    def default(cls):
        return cls(VOC_GROUPS)

    @classmethod
    def parse(cls, text):
        groups = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            names = [n.strip() for n in line.split(",")]
            if any(not n for n in names):
                raise InvalidInputError(f"empty category name in group line {line!r}")
            groups.append(names)
        return cls(groups)

    @classmethod
    def read(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())

    def format(self):
        return "".join(",".join(g) + "\n" for g in self.groups)


def default_grouping_text():
    return resources.files("tclgroup").joinpath("data/voc_groups.txt").read_text("utf-8")


@dataclass(frozen=True)
class GroupingParams:
    tau: float = 1.0
    epsilon: float = 0.00005
    strategy: str = S_BEST

    def __post_init__(self):
        if not self.tau >= 1.0:
            raise InvalidInputError("tau must be >= 1")
        if not self.epsilon > 0.0:
            raise InvalidInputError("epsilon must be positive")
        if self.strategy not in STRATEGIES:
            raise InvalidInputError(
                f"unknown strategy {self.strategy!r}; choose from {', '.join(STRATEGIES)}"
            )


@dataclass(frozen=True)
class GroupStats:
    u_group: float
    delta_group: float
    w_mean: float
    w_std: float
    w_mean_std: float
    size: int


def _member_index(x: MetaFeatureSet, t: GroupingTable):
    pos = {name: i for i, name in enumerate(x.categories)}
    missing = [n for n in t.categories if n not in pos]
    extra = [n for n in x.categories if n not in set(t.categories)]
    if missing or extra:
        parts = []
        if missing:
            parts.append("not in features: " + ", ".join(missing))
        if extra:
            parts.append("not in grouping: " + ", ".join(extra))
        raise InvalidInputError("category mismatch (" + "; ".join(parts) + ")")
    members = [np.array([pos[n] for n in g], dtype=np.intp) for g in t.groups]
    return _Membership(members, x.n_categories)


def _category_moments(features):
    u = features.mean(axis=1)
    dev = features - u[:, None]
    var = np.mean(dev * dev, axis=1)
    delta = np.sqrt(var)
    return u, delta, dev


class _Membership:
    """Row-normalized K x N membership matrix plus group id per category."""

    def __init__(self, members, n_categories):
        self.members = members
        self.sizes = np.array([idx.size for idx in members])
        self.group_of = np.empty(n_categories, dtype=np.intp)
        self.avg = np.zeros((len(members), n_categories))
        for j, idx in enumerate(members):
            self.group_of[idx] = j
            self.avg[j, idx] = 1.0 / idx.size
        self.multi = self.sizes > 1


def _group_arrays(u, delta, mb: _Membership):
    u_grp = mb.avg @ u
    d_grp = mb.avg @ delta
    du = u - u_grp[mb.group_of]
    dd = delta - d_grp[mb.group_of]
    w_ms = np.sqrt(mb.avg @ (du * du))
    # a singleton's w_std is its own delta, which is also d_grp
    w_std = np.where(mb.multi, np.sqrt(mb.avg @ (dd * dd)), d_grp)
    # w_mean coincides with u_grp for both the singleton and multi-member case
    return u_grp, d_grp, u_grp.copy(), w_std, w_ms


def group_stats(x: MetaFeatureSet, t: GroupingTable):
    """Per-group summary statistics, in table order."""
    mb = _member_index(x, t)
    u, delta, _ = _category_moments(x.features)
    u_grp, d_grp, w_mean, w_std, w_ms = _group_arrays(u, delta, mb)
    return [
        GroupStats(
            u_group=float(u_grp[j]),
            delta_group=float(d_grp[j]),
            w_mean=float(w_mean[j]),
            w_std=float(w_std[j]),
            w_mean_std=float(w_ms[j]),
            size=int(mb.sizes[j]),
        )
        for j in range(len(mb.members))
    ]


def pairwise_term(a: GroupStats, b: GroupStats, include_mean=True) -> float:
    """Separation between two groups: exp(dstd^2) + exp(dmean^2)."""
    value = math.exp((a.w_std - b.w_std) ** 2)
    if include_mean:
        value += math.exp((a.w_mean - b.w_mean) ** 2)
    return value


def group_term(j, stats, p: GroupingParams = GroupingParams()) -> float:
    """Inner term q_j / (eps + Q_j + sum_{k>j} U_jk) for group ``j`` (0-based)."""
    if not 0 <= j < len(stats):
        raise InvalidInputError(f"group index {j} out of range for {len(stats)} groups")
    uses_spread, full_pair = _STRATEGY_PARTS[p.strategy]
    sj = stats[j]
    pair_sum = sum(pairwise_term(sj, sk, full_pair) for sk in stats[j + 1:])
    if uses_spread:
        w = sj.w_mean_std
        if w < ZERO_SPREAD:
            return 0.0
        return w / (p.epsilon + 1.0 / w + pair_sum)
    return 1.0 / (p.epsilon + pair_sum)


def group_loss(j, stats, p: GroupingParams = GroupingParams()) -> float:
    """Per-group loss L^j_group under S-BEST (0-based ``j``)."""
    return group_term(j, stats, GroupingParams(p.tau, p.epsilon, S_BEST))


def _re_meta(features, mb: _Membership, p: GroupingParams, need_grad):
    uses_spread, full_pair = _STRATEGY_PARTS[p.strategy]
    u, delta, dev = _category_moments(features)
    _, d_grp, w_mean, w_std, w_ms = _group_arrays(u, delta, mb)
    k = len(mb.members)

    upper = np.triu(np.ones((k, k), dtype=bool), 1)
    ds = w_std[:, None] - w_std[None, :]
    es = np.exp(ds * ds)
    pair = es
    if full_pair:
        dm = w_mean[:, None] - w_mean[None, :]
        em = np.exp(dm * dm)
        pair = es + em
    pair_sum = np.where(upper, pair, 0.0).sum(axis=1)

    if uses_spread:
        live = w_ms >= ZERO_SPREAD
        w_safe = np.where(live, w_ms, 1.0)
        q = np.where(live, w_ms, 0.0)
        denom = p.epsilon + 1.0 / w_safe + pair_sum
    else:
        live = np.ones(k, dtype=bool)
        q = np.ones(k)
        denom = p.epsilon + pair_sum
    term = np.where(live, q / denom, 0.0)
    value = float(np.sum(np.log(p.tau + term)))
    if not need_grad:
        return value, None

    g_term = np.where(live, 1.0 / (p.tau + term), 0.0)
    g_denom = -g_term * q / (denom * denom)
    g_wms = np.zeros(k)
    if uses_spread:
        g_wms = np.where(live, g_term / denom - g_denom / (w_safe * w_safe), 0.0)

    a_std = np.where(upper, g_denom[:, None] * 2.0 * ds * es, 0.0)
    g_wstd = a_std.sum(axis=1) - a_std.sum(axis=0)
    g_wmean = np.zeros(k)
    if full_pair:
        a_mean = np.where(upper, g_denom[:, None] * 2.0 * dm * em, 0.0)
        g_wmean = a_mean.sum(axis=1) - a_mean.sum(axis=0)

    n_cat, dim = features.shape
    g_u = np.zeros(n_cat)
    g_delta = np.zeros(n_cat)
    for j, idx in enumerate(mb.members):
        n = idx.size
        g_u[idx] += g_wmean[j] / n
        if w_ms[j] > 0.0:
            g_u[idx] += g_wms[j] * (u[idx] - w_mean[j]) / (n * w_ms[j])
        if n == 1:
            g_delta[idx] += g_wstd[j]
        elif w_std[j] > 0.0:
            g_delta[idx] += g_wstd[j] * (delta[idx] - d_grp[j]) / (n * w_std[j])

    # zero-variance vectors get a zero subgradient through their std
    inv_delta = np.divide(1.0, delta, out=np.zeros_like(delta), where=delta > 0.0)
    g_x = g_u[:, None] / dim + (g_delta * inv_delta)[:, None] * dev / dim
    return value, g_x


def re_meta_loss(x: MetaFeatureSet, t: GroupingTable,
                 p: GroupingParams = GroupingParams()) -> GradedValue:
    """Grouping loss sum_j log(tau + term_j) and its gradient w.r.t. every
    feature entry (flattened row-major, category by category)."""
    mb = _member_index(x, t)
    value, g_x = _re_meta(x.features, mb, p, need_grad=True)
    return GradedValue(value, g_x)


def re_meta_value_fn(x: MetaFeatureSet, t: GroupingTable,
                     p: GroupingParams = GroupingParams()):
    """Value-only closure over a flattened feature matrix, for differencing."""
    mb = _member_index(x, t)
    shape = x.features.shape

    def f(flat):
        value, _ = _re_meta(np.reshape(flat, shape), mb, p, need_grad=False)
        return value

    return f


def separation_gaps(stats):
    """Smallest |dw_mean| and |dw_std| over all group pairs (nan when K=1)."""
    if len(stats) < 2:
        return math.nan, math.nan
    dmean = min(abs(a.w_mean - b.w_mean)
                for i, a in enumerate(stats) for b in stats[i + 1:])
    dstd = min(abs(a.w_std - b.w_std)
               for i, a in enumerate(stats) for b in stats[i + 1:])
    return dmean, dstd
