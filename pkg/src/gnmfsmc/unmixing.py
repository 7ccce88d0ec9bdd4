"""NMF, GNMF, NMF-SMC and GNMF-SMC solvers.

All four minimize::

    0.5 * ||Y - W H||_F**2  +  alpha * R(H)  -  beta * J(H)

where ``R`` is the graph regularizer and ``J`` the mean S-measure of the
columns of ``H``. A variant simply zeroes the weights it does not use, so the
four share a single code path.

One iteration:

1. ``W <- W * (Y H^T) / (W H H^T)``.
2. ``H <- H * (W^T Y + 2 alpha H A) / (W^T W H + 2 alpha H D)`` with the new
   ``W``, where ``A`` is the graph adjacency and ``D`` its degree matrix
   (``R = tr(H (D - A) H^T)``).
3. sum-to-one projection of ``H`` when ``column_normalize`` is active.
4. if ``beta > 0``: ascent step on ``J`` with backtracking, rejected when it
   would raise the total objective.

``delta_augmentation`` instead appends a constant row to ``Y`` and ``W`` once,
before iterating, and never updates that row of ``W``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .core import (
    AbundanceMatrix,
    EndmemberMatrix,
    HyperspectralScene,
    NumericalFailure,
    ParameterError,
    SumToOne,
    UnmixConfig,
    as_matrix,
    normalize_columns,
    validate_scene,
)
from .graph import PixelGraph, knn_graph
from .sparseness import SMeasureParams, sparseness_cost, sparseness_cost_and_gradient

log = logging.getLogger(__name__)

FLOOR = 1e-12
INIT_EPS = 1e-3
STEP_SLACK = 1e-12
MIN_STEP = 1e-10
CONVERGENCE_RUN = 3


class Termination(str, Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    STALLED = "stalled"


@dataclass(frozen=True)
class Objective:
    total: float
    fit: float
    graph_term: float
    sparse_term: float


@dataclass(frozen=True, eq=False)
class UnmixResult:
    endmembers: EndmemberMatrix
    abundances: AbundanceMatrix
    trace: list[Objective]
    iterations_run: int
    termination: Termination
    seed: int
    config: UnmixConfig
    initial_objective: Optional[Objective] = None
    sparse_steps_taken: int = 0
    extra: dict = field(default_factory=dict)

    def trace_rows(self) -> list[tuple[int, float, float, float, float]]:
        return [(k + 1, o.fit, o.graph_term, o.sparse_term, o.total) for k, o in enumerate(self.trace)]


# ---------------------------------------------------------------- internals

class _Problem:
    """Arrays and cached graph pieces shared by the update and objective."""

    def __init__(self, Y, graph, config: UnmixConfig):
        self.Y = Y
        self.config = config
        self.alpha = config.effective_alpha
        self.beta = config.effective_beta
        self.params = SMeasureParams(config.sigma1)
        if config.variant.uses_graph and graph is None:
            raise ParameterError(f"variant {config.variant.value} requires a pixel graph")
        self.graph = graph if config.variant.uses_graph else None
        if self.graph is not None:
            if self.graph.size != Y.shape[1]:
                raise ParameterError(
                    f"graph has {self.graph.size} nodes but scene has {Y.shape[1]} pixels")
            self.adj = sp.csr_matrix(self.graph.weights)
            self.deg = np.asarray(self.graph.degrees, dtype=float)

    def graph_value(self, H):
        if self.graph is None:
            return 0.0
        HA = np.asarray(self.adj @ H.T).T
        return float(np.sum(self.deg * np.sum(H * H, axis=0)) - np.sum(HA * H))

    def evaluate(self, W, H) -> Objective:
        R = self.Y - W @ H
        fit = 0.5 * float(np.sum(R * R))
        graph_term = self.alpha * self.graph_value(H) if self.graph is not None else 0.0
        sparse_term = self.beta * sparseness_cost(H, self.params) if self.beta > 0 else 0.0
        return Objective(fit + graph_term - sparse_term, fit, graph_term, sparse_term)


def _as_config(config, P=None) -> UnmixConfig:
    if isinstance(config, UnmixConfig):
        return config
    if isinstance(config, dict):
        return UnmixConfig(**config)
    raise ParameterError("config must be an UnmixConfig or a dict")


def _multiplicative_w(Y, W, H, fixed_rows: int = 0):
    num = Y @ H.T
    den = np.maximum(W @ (H @ H.T), FLOOR)
    W_new = np.maximum(W * num / den, FLOOR)
    if fixed_rows:
        W_new[-fixed_rows:] = W[-fixed_rows:]
    return W_new


def _multiplicative_h(prob: _Problem, W, H):
    num = W.T @ prob.Y
    den = (W.T @ W) @ H
    if prob.graph is not None and prob.alpha > 0:
        num = num + 2.0 * prob.alpha * np.asarray(prob.adj @ H.T).T
        den = den + 2.0 * prob.alpha * H * prob.deg
    return np.maximum(H * num / np.maximum(den, FLOOR), FLOOR)


def _sparse_step(prob: _Problem, W, H, current: Objective, project):
    """Backtracked ascent step on ``J`` starting from a unit step.

    Returns ``(H, objective, accepted)``. Trials are screened with the exact
    change in cost written in terms of the step ``delta`` (no cancellation
    against the full residual), then the accepted point is re-evaluated.
    """
    J0, grad = sparseness_cost_and_gradient(H, prob.params)
    direction = prob.beta * grad
    if not np.any(direction):
        return H, current, False
    WtR = W.T @ (prob.Y - W @ H)
    G = W.T @ W
    R0 = prob.graph_value(H)
    eta = 1.0
    while eta >= MIN_STEP:
        trial = project(np.maximum(H + eta * direction, FLOOR))
        delta = trial - H
        change = -np.sum(WtR * delta) + 0.5 * np.sum((G @ delta) * delta)
        if prob.graph is not None:
            change += prob.alpha * (prob.graph_value(trial) - R0)
        change -= prob.beta * (sparseness_cost(trial, prob.params) - J0)
        if change <= STEP_SLACK:
            obj = prob.evaluate(W, trial)
            if obj.total <= current.total + STEP_SLACK:
                return trial, obj, True
        eta *= 0.5
    return H, current, False


def _check_finite(it, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalFailure(f"non-finite value at iteration {it}", iteration=it)


def _augment(Y, W, delta):
    Ya = np.vstack([Y, np.full((1, Y.shape[1]), delta)])
    Wa = np.vstack([W, np.full((1, W.shape[1]), delta)])
    return Ya, Wa


# ---------------------------------------------------------------- public API

def objective(Y, W, H, graph: Optional[PixelGraph] = None, config: UnmixConfig | None = None) -> Objective:
    """Evaluate the regularized cost and its three parts for ``(W, H)``."""
    Y, W, H = as_matrix(Y), as_matrix(W), as_matrix(H)
    if config is None:
        config = UnmixConfig(endmember_count=W.shape[1], variant="NMF")
    if W.shape[0] != Y.shape[0] or H.shape[1] != Y.shape[1] or W.shape[1] != H.shape[0]:
        raise ParameterError(f"non-conformable shapes Y{Y.shape}, W{W.shape}, H{H.shape}")
    return _Problem(Y, graph, config).evaluate(W, H)


def objective_gradient_h(Y, W, H, graph: Optional[PixelGraph] = None,
                         config: UnmixConfig | None = None) -> np.ndarray:
    """Gradient of :func:`objective` with respect to ``H``."""
    Y, W, H = as_matrix(Y), as_matrix(W), as_matrix(H)
    if config is None:
        config = UnmixConfig(endmember_count=W.shape[1], variant="NMF")
    prob = _Problem(Y, graph, config)
    g = W.T @ (W @ H - Y)
    if prob.graph is not None and prob.alpha > 0:
        g = g + 2.0 * prob.alpha * (H * prob.deg - np.asarray(prob.adj @ H.T).T)
    if prob.beta > 0:
        _, gJ = sparseness_cost_and_gradient(H, prob.params)
        g = g - prob.beta * gJ
    return g


def init_factors(Y, P: int, seed: int, strategy: str = "data_columns"):
    """Strictly positive starting factors, reproducible from ``seed``.

    ``uniform_random`` draws both factors i.i.d. from ``(1e-3, 1]``.
    ``data_columns`` uses ``P`` distinct pixel spectra (plus ``1e-3``) for ``W``
    and a uniform random ``H``.
    """
    Y = as_matrix(Y)
    L, M = Y.shape
    P = int(P)
    if P < 1 or P > min(L, M):
        raise ParameterError(f"endmember count {P} must lie in [1, min(L, M) = {min(L, M)}]")
    rng = np.random.default_rng(seed)

    def draw(shape):
        return INIT_EPS + (1.0 - INIT_EPS) * (1.0 - rng.random(shape))

    if strategy == "uniform_random":
        W0 = draw((L, P))
    elif strategy == "data_columns":
        _, first = np.unique(Y.T, axis=0, return_index=True)
        candidates = np.sort(first)
        if len(candidates) < P:
            raise ParameterError(f"scene has only {len(candidates)} distinct pixels, need {P}")
        picks = rng.choice(candidates, size=P, replace=False)
        W0 = Y[:, picks] + INIT_EPS
    else:
        raise ParameterError(f"unknown init strategy {strategy!r}")
    H0 = draw((P, M))
    return W0, H0


def update_step(Y, W, H, graph: Optional[PixelGraph] = None, config: UnmixConfig | None = None):
    """One iteration without sum-to-one handling; returns ``(W', H')``."""
    Y, W, H = as_matrix(Y), as_matrix(W), as_matrix(H)
    if config is None:
        config = UnmixConfig(endmember_count=W.shape[1], variant="NMF")
    prob = _Problem(Y, graph, config)
    W_new, H_new, _, _ = _iterate(prob, np.maximum(W, FLOOR), np.maximum(H, FLOOR), 0)
    return W_new, H_new


def _identity(H):
    return H


def _iterate(prob: _Problem, W, H, it: int, fixed_rows: int = 0, project=_identity):
    W = _multiplicative_w(prob.Y, W, H, fixed_rows)
    _check_finite(it, W)
    H = project(_multiplicative_h(prob, W, H))
    _check_finite(it, H)
    took = False
    if prob.beta > 0:
        H, obj, took = _sparse_step(prob, W, H, prob.evaluate(W, H), project)
        _check_finite(it, H)
        return W, H, obj, took
    return W, H, prob.evaluate(W, H), took


def solve(scene: HyperspectralScene | np.ndarray, config: UnmixConfig | dict,
          graph: Optional[PixelGraph] = None, init: Optional[tuple] = None) -> UnmixResult:
    """Factor ``scene`` according to ``config``.

    ``graph`` overrides the k-NN graph built from the scene; ``init`` supplies
    ``(W0, H0)`` instead of :func:`init_factors`.
    """
    config = _as_config(config)
    if not isinstance(scene, HyperspectralScene):
        scene = HyperspectralScene(np.asarray(scene, dtype=float))
    if scene.data.size == 0:
        raise ParameterError("empty scene")
    problems = validate_scene(scene)
    if problems:
        raise ParameterError("; ".join(v.message for v in problems))
    Y = np.asarray(scene.data, dtype=float)
    P = int(config.endmember_count)

    if init is None:
        W, H = init_factors(Y, P, config.seed, config.init)
    else:
        W, H = (np.array(a, dtype=float) for a in init)
        if W.shape != (Y.shape[0], P) or H.shape != (P, Y.shape[1]):
            raise ParameterError("initial factors do not match scene and endmember count")
    W = np.maximum(W, FLOOR)
    H = np.maximum(H, FLOOR)

    if config.variant.uses_graph and graph is None:
        graph = knn_graph(Y, config.neighbors)

    policy = config.sum_to_one
    fixed_rows = 0
    target = Y
    if policy is SumToOne.DELTA_AUGMENTATION:
        target, W = _augment(Y, W, config.delta)
        fixed_rows = 1
    elif policy is SumToOne.COLUMN_NORMALIZE:
        H = normalize_columns(H)

    prob = _Problem(target, graph, config)
    current = prob.evaluate(W, H)
    initial = current
    trace: list[Objective] = []
    termination = Termination.MAX_ITERATIONS
    quiet = 0
    sparse_steps = 0

    project = normalize_columns if policy is SumToOne.COLUMN_NORMALIZE else _identity
    for it in range(1, int(config.max_iterations) + 1):
        W_new, H_new, obj, took = _iterate(prob, W, H, it, fixed_rows, project)
        sparse_steps += took
        if not np.isfinite(obj.total):
            raise NumericalFailure(f"non-finite objective at iteration {it}", iteration=it)
        trace.append(obj)
        unchanged = np.array_equal(W_new, W) and np.array_equal(H_new, H)
        rel = abs(obj.total - current.total) / max(abs(current.total), 1e-30)
        W, H, current = W_new, H_new, obj
        if unchanged:
            termination = Termination.STALLED
            break
        quiet = quiet + 1 if rel < config.objective_tolerance else 0
        if quiet >= CONVERGENCE_RUN:
            termination = Termination.CONVERGED
            break

    log.debug("%s finished after %d iterations (%s)", config.variant.value, len(trace), termination.value)
    W_out = W[:-fixed_rows] if fixed_rows else W
    if policy is SumToOne.OFF:
        abundances = AbundanceMatrix(H)
    else:
        abundances = AbundanceMatrix(normalize_columns(H), normalized=True)
    return UnmixResult(
        endmembers=EndmemberMatrix(W_out),
        abundances=abundances,
        trace=trace,
        iterations_run=len(trace),
        termination=termination,
        seed=int(config.seed),
        config=config,
        initial_objective=initial,
        sparse_steps_taken=int(sparse_steps),
    )
