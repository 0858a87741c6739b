"""Vector statistics and the finite-difference gradient oracle."""

from dataclasses import dataclass
import math

import numpy as np

DEFAULT_FEATURE_DIM = 1024


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


@dataclass(frozen=True)
class VectorStats:
    mean: float
    std: float


@dataclass(frozen=True)
class GradedValue:
    """A scalar loss together with its gradient (flattened, C order)."""

    value: float
    gradient: np.ndarray

    def __post_init__(self):
        grad = np.asarray(self.gradient, dtype=np.float64).ravel()
        grad.setflags(write=False)
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "gradient", grad)


def as_feature_vector(x):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError("feature vector must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("feature vector contains non-finite entries")
    return arr


def vector_stats(x) -> VectorStats:
    """Mean and population standard deviation of a feature vector.

    Uses 1/|F| normalization for both moments (no Bessel correction).
    A constant vector yields exactly ``std == 0``.
    """
    arr = as_feature_vector(x)
    if np.all(arr == arr[0]):
        # the summed mean can drift by an ulp
        return VectorStats(mean=float(arr[0]), std=0.0)
    mean = float(np.mean(arr))
    var = float(np.mean((arr - mean) ** 2))
    std = math.sqrt(var) if var > 0.0 else 0.0
    return VectorStats(mean=mean, std=std)


def finite_diff_gradient(f, x, h=1e-5):
    """Central-difference gradient of scalar ``f`` at the flat vector ``x``."""
    if not h > 0:
        raise InvalidInputError("step size h must be positive")
    x0 = np.array(x, dtype=np.float64).ravel()
    grad = np.empty_like(x0)
    xk = x0.copy()
    for k in range(x0.size):
        xk[k] = x0[k] + h
        fplus = float(f(xk))
        xk[k] = x0[k] - h
        fminus = float(f(xk))
        xk[k] = x0[k]
        if not (math.isfinite(fplus) and math.isfinite(fminus)):
            raise FloatingPointError(
                f"non-finite function value while differencing coordinate {k}"
            )
        grad[k] = (fplus - fminus) / (2.0 * h)
    return grad


def relative_gradient_error(analytic, numeric) -> float:
    """max_k |a_k - n_k| / max(1, |a_k|, |n_k|)."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    if a.shape != n.shape:
        raise InvalidInputError(
            f"gradient length mismatch: {a.size} analytic vs {n.size} numeric"
        )
    if a.size == 0:
        return 0.0
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
    return float(np.max(np.abs(a - n) / denom))
