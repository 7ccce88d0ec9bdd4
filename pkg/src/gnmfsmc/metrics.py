"""Spectral / abundance angle distances, RMS aggregation and endmember matching."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import DegenerateInputError, EndmemberMatrix, ParameterError, as_matrix


def _angle(u, v, what: str) -> float:
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise ParameterError(f"{what}: length mismatch {u.size} vs {v.size}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise DegenerateInputError(f"{what}: angle with a zero vector is undefined")
    return float(np.arccos(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0)))


def sad(m, m_hat) -> float:
    """Spectral angle distance in radians."""
    return _angle(m, m_hat, "SAD")


def aad(a, a_hat) -> float:
    """Abundance angle distance in radians."""
    return _angle(a, a_hat, "AAD")


def column_angles(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Angles between matching columns of ``A`` and ``B`` (vectorized)."""
    A, B = np.asarray(A, dtype=float), np.asarray(B, dtype=float)
    na, nb = np.linalg.norm(A, axis=0), np.linalg.norm(B, axis=0)
    bad = np.flatnonzero((na == 0) | (nb == 0))
    if bad.size:
        raise DegenerateInputError(f"zero vector in column {int(bad[0])}")
    cos = np.sum(A * B, axis=0) / (na * nb)
    return np.arccos(np.clip(cos, -1.0, 1.0))


def sad_matrix(S_true: np.ndarray, S_est: np.ndarray) -> np.ndarray:
    """``C[i, j]`` = SAD between estimated column ``i`` and true column ``j``."""
    T = S_true / np.linalg.norm(S_true, axis=0)
    E = S_est / np.linalg.norm(S_est, axis=0)
    return np.arccos(np.clip(E.T @ T, -1.0, 1.0))


def match_endmembers(S_true: EndmemberMatrix | np.ndarray, S_est: EndmemberMatrix | np.ndarray) -> np.ndarray:
    """Permutation ``perm`` with ``perm[i]`` the true index assigned to estimate ``i``.

    Minimizes the summed SAD over all bijections.
    """
    T, E = as_matrix(S_true), as_matrix(S_est)
    if T.shape != E.shape:
        raise ParameterError(f"endmember shapes differ: true {T.shape}, estimated {E.shape}")
    cost = sad_matrix(T, E)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(rows), dtype=int)
    perm[rows] = cols
    return perm


@dataclass(frozen=True)
class EvaluationReport:
    per_endmember_sad: np.ndarray
    per_pixel_aad: np.ndarray
    rms_sad: float
    rms_aad: float
    matching: np.ndarray
    excluded_pixels: int = 0
    degrees_flag: bool = True

    def rendered(self) -> dict:
        conv = np.degrees if self.degrees_flag else (lambda x: x)
        unit = "degrees" if self.degrees_flag else "radians"
        return {
            "unit": unit,
            "rms_sad": float(conv(self.rms_sad)),
            "rms_aad": float(conv(self.rms_aad)),
            "per_endmember_sad": [float(v) for v in conv(self.per_endmember_sad)],
            "matching": [int(i) for i in self.matching],
            "pixels_evaluated": int(len(self.per_pixel_aad)),
            "excluded_pixels": int(self.excluded_pixels),
        }

    def to_json(self) -> str:
        return json.dumps(self.rendered(), indent=2)

    def to_text(self) -> str:
        r = self.rendered()
        lines = [f"unit {r['unit']}", f"rms_sad {r['rms_sad']:.6f}", f"rms_aad {r['rms_aad']:.6f}"]
        for i, v in enumerate(r["per_endmember_sad"]):
            lines.append(f"sad_{i} {v:.6f}")
        lines.append("matching " + " ".join(str(i) for i in r["matching"]))
        lines.append(f"excluded_pixels {r['excluded_pixels']}")
        return "\n".join(lines) + "\n"


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x)))) if len(x) else 0.0


def evaluate(S_true, A_true, result=None, *, S_est=None, A_est=None) -> EvaluationReport:
    """Match estimated endmembers to the truth, then score both factors.

    ``result`` is an :class:`~gnmfsmc.unmixing.UnmixResult` or a ``(W, H)``
    pair; alternatively pass ``S_est`` and ``A_est`` directly. Pixels whose true
    abundance column is all zero are left out of the AAD and counted.
    """
    if result is not None:
        if hasattr(result, "endmembers"):
            S_est, A_est = result.endmembers, result.abundances
        else:
            S_est, A_est = result
    T, At = as_matrix(S_true), as_matrix(A_true)
    E, Ae = as_matrix(S_est), as_matrix(A_est)
    if T.shape != E.shape:
        raise ParameterError(f"endmember shape mismatch: expected {T.shape}, got {E.shape}")
    if At.shape != Ae.shape:
        raise ParameterError(f"abundance shape mismatch: expected {At.shape}, got {Ae.shape}")
    perm = match_endmembers(T, E)
    inv = np.argsort(perm)
    E_aligned = E[:, inv]
    Ae_aligned = Ae[inv, :]
    sads = column_angles(T, E_aligned)
    keep = np.any(At > 0, axis=0)
    kept = np.flatnonzero(keep)
    dead = kept[~np.any(Ae_aligned[:, kept] != 0, axis=0)]
    if dead.size:
        raise DegenerateInputError(f"estimated abundance column {int(dead[0])} is all zero")
    aads = column_angles(At[:, kept], Ae_aligned[:, kept])
    return EvaluationReport(
        per_endmember_sad=sads,
        per_pixel_aad=aads,
        rms_sad=_rms(sads),
        rms_aad=_rms(aads),
        matching=perm,
        excluded_pixels=int((~keep).sum()),
    )


__all__ = [
    "sad",
    "aad",
    "column_angles",
    "sad_matrix",
    "match_endmembers",
    "EvaluationReport",
    "evaluate",
]
