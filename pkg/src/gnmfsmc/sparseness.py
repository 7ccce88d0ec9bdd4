"""S-measure sparseness score, the column-averaged sparseness cost, and gradients.

The score of a nonnegative vector ``x`` of length ``n`` is built from the power
sums ``k1 = sum(x)``, ``k2 = sum(x**2)``, ``k3 = sum(x**3)``, ``k4 = sum(x**4)``::

    f_max = (1/n**3 - s1/n + s2/n**2) * k1**4
    f_min = (1 - s1 + s2) * k1**4
    S(x)  = (f_max - (k4 - s1*k1**2*k2 + s2*k1*k3)) / (f_max - f_min)

with ``s2 = (2*s1 - 4)/3``. One-hot vectors score 1 and constant vectors 0.
Every term is homogeneous of degree 4, so ``S`` is evaluated on ``x / k1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AbundanceMatrix, DegenerateInputError, ParameterError, as_matrix

DEFAULT_SIGMA1 = 2.0
CLAMP_TOLERANCE = 1e-9


class SMeasureConsistencyError(RuntimeError):
    """Raw score left [0, 1] by more than the clamp tolerance."""


@dataclass(frozen=True)
class SMeasureParams:
    sigma1: float = DEFAULT_SIGMA1

    def __post_init__(self):
        if not self.sigma1 > 0:
            raise ParameterError(f"sigma1 must be > 0, got {self.sigma1}")

    @property
    def sigma2(self) -> float:
        return (2.0 * self.sigma1 - 4.0) / 3.0


def _params(params) -> SMeasureParams:
    if params is None:
        return SMeasureParams()
    if isinstance(params, SMeasureParams):
        return params
    return SMeasureParams(float(params))


def _coefficients(n: int, p: SMeasureParams) -> tuple[float, float]:
    s1, s2 = p.sigma1, p.sigma2
    a = 1.0 / n**3 - s1 / n + s2 / n**2
    b = 1.0 - s1 + s2
    return a, b


def _clamp(raw: np.ndarray) -> np.ndarray:
    lo, hi = raw.min(initial=0.0), raw.max(initial=0.0)
    if lo < -CLAMP_TOLERANCE or hi > 1.0 + CLAMP_TOLERANCE:
        raise SMeasureConsistencyError(f"S-measure left [0, 1]: range [{lo!r}, {hi!r}]")
    return np.clip(raw, 0.0, 1.0)


def _columns(X: np.ndarray, p: SMeasureParams, with_grad: bool):
    """Scores (and gradients) of the columns of ``X``; zero columns give 0."""
    n = X.shape[0]
    if n < 2:
        raise ParameterError(f"S-measure needs vectors of length >= 2, got {n}")
    a, b = _coefficients(n, p)
    k1 = X.sum(axis=0)
    live = k1 > 0
    U = np.zeros_like(X)
    U[:, live] = X[:, live] / k1[live]
    U2 = U * U
    g = (U2 * U2).sum(axis=0) - p.sigma1 * U2.sum(axis=0) + p.sigma2 * (U2 * U).sum(axis=0)
    raw = np.where(live, (a - g) / (a - b), 0.0)
    scores = _clamp(raw)
    if not with_grad:
        return scores, None
    q = 4.0 * U2 * U - 2.0 * p.sigma1 * U + 3.0 * p.sigma2 * U2
    proj = q - (U * q).sum(axis=0)
    grad = np.zeros_like(X)
    grad[:, live] = -proj[:, live] / ((a - b) * k1[live])
    return scores, grad


def _check_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ParameterError("expected a 1-D vector")
    if x.size < 2:
        raise ParameterError(f"S-measure needs vectors of length >= 2, got {x.size}")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ParameterError("S-measure is defined for finite nonnegative vectors")
    if not np.any(x > 0):
        raise DegenerateInputError("S-measure of an all-zero vector is undefined")
    return x


def s_measure(x, params: SMeasureParams | float | None = None) -> float:
    x = _check_vector(x)
    scores, _ = _columns(x[:, None], _params(params), with_grad=False)
    return float(scores[0])


def s_measure_gradient(x, params: SMeasureParams | float | None = None) -> np.ndarray:
    """Analytic gradient of :func:`s_measure` on the nonnegative orthant."""
    x = _check_vector(x)
    _, grad = _columns(x[:, None], _params(params), with_grad=True)
    return grad[:, 0]


def sparseness_cost(H: AbundanceMatrix | np.ndarray, params: SMeasureParams | float | None = None) -> float:
    """Mean S-measure over the pixel columns of ``H``."""
    X = as_matrix(H)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ParameterError("H must be a matrix with at least one column")
    scores, _ = _columns(X, _params(params), with_grad=False)
    return float(scores.mean())


def sparseness_cost_gradient(H: AbundanceMatrix | np.ndarray,
                             params: SMeasureParams | float | None = None) -> np.ndarray:
    X = as_matrix(H)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ParameterError("H must be a matrix with at least one column")
    _, grad = _columns(X, _params(params), with_grad=True)
    return grad / X.shape[1]


def sparseness_cost_and_gradient(H: np.ndarray, params: SMeasureParams | float | None = None):
    X = as_matrix(H)
    scores, grad = _columns(X, _params(params), with_grad=True)
    return float(scores.mean()), grad / X.shape[1]
