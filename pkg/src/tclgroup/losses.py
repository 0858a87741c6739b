"""Classification losses over per-class probability scores.

All losses take a :class:`ClassScores` (probabilities in [0, 1] plus the
index of the true class) and return a :class:`GradedValue` whose gradient is
taken with respect to the full score vector.
"""

from dataclasses import dataclass
import math

import numpy as np

from .numerics import GradedValue, InvalidInputError

LOG_EPS = 1e-12


@dataclass(frozen=True)
class ClassScores:
    scores: np.ndarray
    true_label: int

    def __post_init__(self):
        s = np.array(self.scores, dtype=np.float64).ravel()
        if s.size < 2:
            raise InvalidInputError("need at least two class scores")
        if not np.all(np.isfinite(s)):
            raise InvalidInputError("scores must be finite")
        if np.any(s < 0.0) or np.any(s > 1.0):
            raise InvalidInputError("scores must lie in [0, 1]")
        t = int(self.true_label)
        if not 0 <= t < s.size:
            raise InvalidInputError(f"true_label {t} out of range for {s.size} classes")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "true_label", t)

    @property
    def n_classes(self):
        return self.scores.size


@dataclass(frozen=True)
class TclParams:
    """Hyperparameters of the top-C loss.

    ``beta_minus`` holds one threshold per false rank (C-1 entries); left as
    ``None`` it is filled with 0.5 for every rank.
    """

    beta_plus: float = 1.0
    beta_minus: tuple = None
    eta: float = 1.0
    gamma: float = 1.0
    c: int = 2

    def __post_init__(self):
        c = int(self.c)
        if c < 2:
            raise InvalidInputError("C must be at least 2")
        bm = (0.5,) * (c - 1) if self.beta_minus is None else tuple(
            float(b) for b in np.atleast_1d(self.beta_minus)
        )
        if len(bm) != c - 1:
            raise InvalidInputError(f"beta_minus needs {c - 1} entries, got {len(bm)}")
        if any(not 0.0 <= b <= 1.0 for b in bm):
            raise InvalidInputError("beta_minus entries must lie in [0, 1]")
        if not 0.0 <= self.beta_plus <= 1.0:
            raise InvalidInputError("beta_plus must lie in [0, 1]")
        if not (self.eta > 0 and self.gamma > 0):
            raise InvalidInputError("eta and gamma must be positive")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "beta_minus", bm)
        object.__setattr__(self, "beta_plus", float(self.beta_plus))
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "gamma", float(self.gamma))


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 1.0
    omega: float = 6.0
    lam: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "omega", "lam"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidInputError(f"{name} must be finite and nonnegative")


def top_false_classes(s: ClassScores, count: int):
    """Indices of the ``count`` highest-scoring classes other than the true one.

    Sorted by descending score; equal scores keep ascending index order.
    """
    n = s.n_classes
    if not 1 <= count <= n - 1:
        raise InvalidInputError(f"count must be in [1, {n - 1}], got {count}")
    false_idx = [i for i in range(n) if i != s.true_label]
    false_idx.sort(key=lambda i: (-s.scores[i], i))
    return false_idx[:count]


def _log_eta_exp(z, eta):
    # log(eta + e^z) and d/dz, stable for large z
    if z > 0:
        value = z + math.log1p(eta * math.exp(-z))
        deriv = 1.0 / (1.0 + eta * math.exp(-z))
    else:
        ez = math.exp(z)
        value = math.log(eta + ez)
        deriv = ez / (eta + ez)
    return value, deriv


def tcl_terms(s: ClassScores, p: TclParams):
    """Positive term and the list of per-rank negative terms (values only)."""
    if p.c > s.n_classes:
        raise InvalidInputError(f"C={p.c} exceeds the number of classes {s.n_classes}")
    pt = s.scores[s.true_label]
    pos, _ = _log_eta_exp(p.gamma * (p.beta_plus - pt), p.eta)
    neg = []
    for rank, idx in enumerate(top_false_classes(s, p.c - 1)):
        v, _ = _log_eta_exp(p.gamma * (s.scores[idx] - p.beta_minus[rank]), p.eta)
        neg.append(v)
    return pos, neg


def tcl_loss(s: ClassScores, p: TclParams = TclParams()) -> GradedValue:
    """Top-C classification loss.

    The true-class score is pulled toward ``beta_plus`` and each of the C-1
    most confident false classes is pushed below its rank threshold.
    The gradient treats the top-(C-1) selection as fixed.
    """
    if p.c > s.n_classes:
        raise InvalidInputError(f"C={p.c} exceeds the number of classes {s.n_classes}")
    grad = np.zeros(s.n_classes)
    t = s.true_label
    value, d = _log_eta_exp(p.gamma * (p.beta_plus - s.scores[t]), p.eta)
    grad[t] = -p.gamma * d
    for rank, idx in enumerate(top_false_classes(s, p.c - 1)):
        v, d = _log_eta_exp(p.gamma * (s.scores[idx] - p.beta_minus[rank]), p.eta)
        value += v
        grad[idx] = p.gamma * d
    return GradedValue(value, grad)


def tcl2_loss(s: ClassScores, p: TclParams = TclParams()) -> GradedValue:
    if p.c != 2:
        raise InvalidInputError(f"tcl2_loss requires C=2, got C={p.c}")
    return tcl_loss(s, p)


def _onehot(s: ClassScores):
    y = np.zeros(s.n_classes)
    y[s.true_label] = 1.0
    return y


def bce_loss(s: ClassScores) -> GradedValue:
    """Independent per-class binary cross-entropy against a one-hot target."""
    y = _onehot(s)
    x = s.scores
    xc = np.clip(x, LOG_EPS, 1.0 - LOG_EPS)
    value = -np.sum(y * np.log(xc) + (1.0 - y) * np.log(1.0 - xc))
    inside = (x > LOG_EPS) & (x < 1.0 - LOG_EPS)
    grad = np.where(inside, -y / xc + (1.0 - y) / (1.0 - xc), 0.0)
    return GradedValue(value, grad)


def focal_loss(s: ClassScores, gamma_f=2.0, alpha_f=0.25) -> GradedValue:
    """Per-class sigmoid focal loss with class-balance weight ``alpha_f``."""
    if gamma_f < 0:
        raise InvalidInputError("gamma_f must be nonnegative")
    if not 0.0 <= alpha_f <= 1.0:
        raise InvalidInputError("alpha_f must lie in [0, 1]")
    y = _onehot(s)
    p = np.where(y == 1.0, s.scores, 1.0 - s.scores)
    w = np.where(y == 1.0, alpha_f, 1.0 - alpha_f)
    pc = np.clip(p, LOG_EPS, 1.0 - LOG_EPS)
    logp = np.log(pc)
    one_minus = 1.0 - p
    mod = one_minus ** gamma_f
    value = float(np.sum(-w * mod * logp))

    dlogp = np.where((p > LOG_EPS) & (p < 1.0 - LOG_EPS), 1.0 / pc, 0.0)
    if gamma_f == 0:
        dmod = np.zeros_like(p)
    else:
        safe = np.where(one_minus > 0, one_minus, 1.0)
        dmod = np.where(one_minus > 0, -gamma_f * safe ** (gamma_f - 1.0), 0.0)
    dp = -w * (dmod * logp + mod * dlogp)
    grad = np.where(y == 1.0, dp, -dp)
    return GradedValue(value, grad)


def cross_entropy_loss(s: ClassScores) -> GradedValue:
    """Softmax cross-entropy, with the scores used directly as logits."""
    z = s.scores - np.max(s.scores)
    ez = np.exp(z)
    soft = ez / np.sum(ez)
    value = -(z[s.true_label] - math.log(np.sum(ez)))
    return GradedValue(value, soft - _onehot(s))


def combined_loss(l_cls, l_re_meta, l_loc, w: LossWeights = LossWeights()) -> float:
    """Weighted objective alpha*cls + omega*re_meta + lambda*loc."""
    terms = (l_cls, l_re_meta, l_loc)
    if not all(math.isfinite(v) for v in terms):
        raise InvalidInputError("combined_loss inputs must be finite")
    return w.alpha * l_cls + w.omega * l_re_meta + w.lam * l_loc

