"""Plain-text readers and writers.

Matrix files::

    rows cols
    v11 v12 ...
    ...

Label maps use the same header with integer entries (``-1`` is background).
Spectral libraries start with ``L K``, may carry a ``wavelengths v1 .. vL``
line, then hold ``K`` lines of ``name v1 .. vL``.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .simdata import BACKGROUND, GroundTruthMap, SpectralLibrary


class FormatError(ValueError):
    """Malformed text input; message carries ``path:line``."""


def _lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if text:
                yield lineno, text


def _header(path, it, n=2):
    try:
        lineno, text = next(it)
    except StopIteration:
        raise FormatError(f"{path}: empty file") from None
    parts = text.split()
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise FormatError(f"{path}:{lineno}: header must be {n} integers, got {text!r}") from None
    if len(vals) != n or any(v < 0 for v in vals):
        raise FormatError(f"{path}:{lineno}: header must be {n} nonnegative integers, got {text!r}")
    return vals


def write_matrix(path: str | Path, A) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    with open(path, "w") as fh:
        fh.write(f"{A.shape[0]} {A.shape[1]}\n")
        for row in A:
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_matrix(path: str | Path, nonnegative: bool = False) -> np.ndarray:
    it = _lines(path)
    rows, cols = _header(path, it)
    out = np.empty((rows, cols))
    r = 0
    for lineno, text in it:
        if r >= rows:
            raise FormatError(f"{path}:{lineno}: more than {rows} data rows")
        parts = text.split()
        if len(parts) != cols:
            raise FormatError(f"{path}:{lineno}: expected {cols} values, got {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric value") from None
        if any(not math.isfinite(v) for v in vals):
            raise FormatError(f"{path}:{lineno}: non-finite value")
        if nonnegative and any(v < 0 for v in vals):
            raise FormatError(f"{path}:{lineno}: negative value")
        out[r] = vals
        r += 1
    if r != rows:
        raise FormatError(f"{path}: expected {rows} data rows, found {r}")
    return out


def write_label_map(path: str | Path, gt: GroundTruthMap) -> None:
    lab = gt.labels
    with open(path, "w") as fh:
        fh.write(f"{lab.shape[0]} {lab.shape[1]}\n")
        for row in lab:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def read_label_map(path: str | Path) -> GroundTruthMap:
    it = _lines(path)
    rows, cols = _header(path, it)
    out = np.empty((rows, cols), dtype=np.int64)
    r = 0
    for lineno, text in it:
        if r >= rows:
            raise FormatError(f"{path}:{lineno}: more than {rows} rows")
        parts = text.split()
        if len(parts) != cols:
            raise FormatError(f"{path}:{lineno}: expected {cols} labels, got {len(parts)}")
        try:
            vals = [int(p) for p in parts]
        except ValueError:
            raise FormatError(f"{path}:{lineno}: labels must be integers") from None
        if any(v < BACKGROUND for v in vals):
            raise FormatError(f"{path}:{lineno}: label below {BACKGROUND}")
        out[r] = vals
        r += 1
    if r != rows:
        raise FormatError(f"{path}: expected {rows} rows, found {r}")
    return GroundTruthMap(out)


def write_library(path: str | Path, lib: SpectralLibrary) -> None:
    K, L = lib.spectra.shape
    with open(path, "w") as fh:
        fh.write(f"{L} {K}\n")
        if lib.wavelengths is not None:
            fh.write("wavelengths " + " ".join(repr(float(w)) for w in lib.wavelengths) + "\n")
        for name, spec in lib.entries:
            if not name or any(ch.isspace() for ch in name):
                raise FormatError(f"library name {name!r} must be a single token")
            fh.write(name + " " + " ".join(repr(float(v)) for v in spec) + "\n")


def read_library(path: str | Path) -> SpectralLibrary:
    it = _lines(path)
    L, K = _header(path, it)
    wavelengths = None
    names, spectra = [], []
    for lineno, text in it:
        parts = text.split()
        head, values = parts[0], parts[1:]
        if len(values) != L:
            raise FormatError(f"{path}:{lineno}: expected {L} values after {head!r}, got {len(values)}")
        try:
            vals = [float(v) for v in values]
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric value") from None
        if any(math.isnan(v) or math.isinf(v) for v in vals):
            raise FormatError(f"{path}:{lineno}: NaN or infinite value")
        if head == "wavelengths" and wavelengths is None and not names:
            wavelengths = np.array(vals)
            continue
        if any(v < 0 for v in vals):
            raise FormatError(f"{path}:{lineno}: negative reflectance")
        names.append(head)
        spectra.append(vals)
    if len(names) != K:
        raise FormatError(f"{path}: header declares {K} spectra, found {len(names)}")
    return SpectralLibrary(tuple(names), np.array(spectra).reshape(K, L), wavelengths)


def write_trace(path: str | Path, result) -> None:
    with open(path, "w") as fh:
        fh.write("iter,fit,graph_term,sparse_term,total\n")
        for k, fit, g, s, tot in result.trace_rows():
            fh.write(f"{k},{fit!r},{g!r},{s!r},{tot!r}\n")


def read_trace(path: str | Path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
