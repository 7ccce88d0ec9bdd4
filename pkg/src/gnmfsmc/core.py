"""Data model shared by every part of the package.

Orientation is fixed everywhere: ``Y = W @ H`` with ``Y`` of shape
``(bands, pixels)``, ``W`` of shape ``(bands, endmembers)`` and ``H`` of shape
``(endmembers, pixels)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

SUM_TO_ONE_EPS = 1e-6


class ParameterError(ValueError):
    """Invalid argument value or shape."""


class DegenerateInputError(ValueError):
    """Input for which the requested quantity is undefined (e.g. a zero vector)."""


class NumericalFailure(ArithmeticError):
    """Non-finite value produced during iteration."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class Variant(str, Enum):
    NMF = "NMF"
    GNMF = "GNMF"
    NMF_SMC = "NMF_SMC"
    GNMF_SMC = "GNMF_SMC"

    @property
    def uses_graph(self) -> bool:
        return self in (Variant.GNMF, Variant.GNMF_SMC)

    @property
    def uses_sparseness(self) -> bool:
        return self in (Variant.NMF_SMC, Variant.GNMF_SMC)

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ParameterError(f"unknown variant {value!r}") from None


class SumToOne(str, Enum):
    OFF = "off"
    COLUMN_NORMALIZE = "column_normalize"
    DELTA_AUGMENTATION = "delta_augmentation"

    @classmethod
    def parse(cls, value) -> "SumToOne":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ParameterError(f"unknown sum_to_one policy {value!r}") from None


@dataclass(frozen=True, eq=False)
class HyperspectralScene:
    """Observed nonnegative scene, one column per pixel."""

    data: np.ndarray
    spatial_shape: Optional[tuple[int, int]] = None
    wavelengths: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(np.atleast_2d(self.data)))
        if self.spatial_shape is not None:
            object.__setattr__(self, "spatial_shape", tuple(int(s) for s in self.spatial_shape))
        if self.wavelengths is not None:
            object.__setattr__(self, "wavelengths", _frozen(self.wavelengths))

    @property
    def band_count(self) -> int:
        return self.data.shape[0]

    @property
    def pixel_count(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class EndmemberMatrix:
    signatures: np.ndarray
    names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        sig = _frozen(np.atleast_2d(self.signatures))
        if not np.all(np.isfinite(sig)) or np.any(sig < 0):
            raise ParameterError("endmember signatures must be finite and nonnegative")
        if np.any(~sig.any(axis=0)):
            raise ParameterError("endmember matrix has an all-zero column")
        object.__setattr__(self, "signatures", sig)
        if self.names is not None:
            names = tuple(str(n) for n in self.names)
            if len(names) != sig.shape[1]:
                raise ParameterError("names length does not match endmember count")
            object.__setattr__(self, "names", names)

    @property
    def count(self) -> int:
        return self.signatures.shape[1]


@dataclass(frozen=True, eq=False)
class AbundanceMatrix:
    fractions: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        frac = _frozen(np.atleast_2d(self.fractions))
        if not np.all(np.isfinite(frac)) or np.any(frac < 0):
            raise ParameterError("abundances must be finite and nonnegative")
        if self.normalized:
            sums = frac.sum(axis=0)
            if np.any(np.abs(sums - 1.0) > SUM_TO_ONE_EPS):
                raise ParameterError("abundance columns flagged normalized do not sum to one")
        object.__setattr__(self, "fractions", frac)


@dataclass(frozen=True)
class UnmixConfig:
    """Solver settings. Weights irrelevant to the chosen variant are ignored."""

    endmember_count: int
    variant: Variant = Variant.GNMF_SMC
    alpha: float = 0.1
    beta: float = 0.1
    sigma1: float = 2.0
    neighbors: int = 5
    max_iterations: int = 500
    objective_tolerance: float = 1e-6
    seed: int = 0
    sum_to_one: SumToOne = SumToOne.COLUMN_NORMALIZE
    delta: float = 10.0
    init: str = "data_columns"

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        object.__setattr__(self, "sum_to_one", SumToOne.parse(self.sum_to_one))
        problems = []
        if int(self.endmember_count) < 1:
            problems.append("endmember_count must be >= 1")
        if self.alpha < 0:
            problems.append("alpha must be >= 0")
        if self.beta < 0:
            problems.append("beta must be >= 0")
        if not self.sigma1 > 0:
            problems.append("sigma1 must be > 0")
        if int(self.neighbors) < 1:
            problems.append("neighbors must be >= 1")
        if int(self.max_iterations) < 1:
            problems.append("max_iterations must be >= 1")
        if not self.objective_tolerance > 0:
            problems.append("objective_tolerance must be > 0")
        if not self.delta > 0:
            problems.append("delta must be > 0")
        if self.init not in ("uniform_random", "data_columns"):
            problems.append(f"unknown init strategy {self.init!r}")
        if problems:
            raise ParameterError("; ".join(problems))

    @property
    def effective_alpha(self) -> float:
        return float(self.alpha) if self.variant.uses_graph else 0.0

    @property
    def effective_beta(self) -> float:
        return float(self.beta) if self.variant.uses_sparseness else 0.0

    def as_dict(self) -> dict:
        return {
            "endmember_count": int(self.endmember_count),
            "variant": self.variant.value,
            "alpha": float(self.alpha),
            "beta": float(self.beta),
            "sigma1": float(self.sigma1),
            "neighbors": int(self.neighbors),
            "max_iterations": int(self.max_iterations),
            "objective_tolerance": float(self.objective_tolerance),
            "seed": int(self.seed),
            "sum_to_one": self.sum_to_one.value,
            "delta": float(self.delta),
            "init": self.init,
        }


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    location: Optional[tuple[int, ...]] = None


def validate_scene(scene: HyperspectralScene) -> list[Violation]:
    """Return every invariant violation of ``scene``; an empty list means valid."""
    out: list[Violation] = []
    data = scene.data
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
        out.append(Violation("shape", f"scene must be a non-empty 2-D matrix, got shape {data.shape}"))
        return out
    bad = ~np.isfinite(data)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        out.append(Violation("non_finite", f"non-finite entry at row {r}, col {c}", (int(r), int(c))))
    neg = np.isfinite(data) & (data < 0)
    if neg.any():
        r, c = np.argwhere(neg)[0]
        out.append(Violation("negative", f"negative entry {data[r, c]!r} at row {r}, col {c}", (int(r), int(c))))
    if scene.spatial_shape is not None:
        rows, cols = scene.spatial_shape
        if rows * cols != data.shape[1]:
            out.append(Violation("spatial_shape", f"rows·cols ≠ M ({rows}·{cols} != {data.shape[1]})"))
    if scene.wavelengths is not None and len(scene.wavelengths) != data.shape[0]:
        out.append(Violation("wavelengths", f"expected {data.shape[0]} wavelengths, got {len(scene.wavelengths)}"))
    return out


def normalize_columns(H: np.ndarray) -> np.ndarray:
    """Array-level column normalization; all-zero columns become uniform."""
    H = np.asarray(H, dtype=float)
    sums = H.sum(axis=0)
    out = np.empty_like(H)
    zero = sums <= 0
    ok = ~zero
    out[:, ok] = H[:, ok] / sums[ok]
    out[:, zero] = 1.0 / H.shape[0]
    return out


def column_normalize(H: AbundanceMatrix | np.ndarray) -> AbundanceMatrix:
    frac = H.fractions if isinstance(H, AbundanceMatrix) else H
    return AbundanceMatrix(normalize_columns(frac), normalized=True)


def as_matrix(x: HyperspectralScene | EndmemberMatrix | AbundanceMatrix | Sequence | np.ndarray) -> np.ndarray:
    if isinstance(x, HyperspectralScene):
        return np.asarray(x.data, dtype=float)
    if isinstance(x, EndmemberMatrix):
        return np.asarray(x.signatures, dtype=float)
    if isinstance(x, AbundanceMatrix):
        return np.asarray(x.fractions, dtype=float)
    return np.asarray(x, dtype=float)


__all__ = [
    "SUM_TO_ONE_EPS",
    "ParameterError",
    "DegenerateInputError",
    "NumericalFailure",
    "Variant",
    "SumToOne",
    "HyperspectralScene",
    "EndmemberMatrix",
    "AbundanceMatrix",
    "UnmixConfig",
    "Violation",
    "validate_scene",
    "column_normalize",
    "normalize_columns",
    "as_matrix",
]
