"""Nearest-neighbour pixel graph and its Laplacian regularizer."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .core import AbundanceMatrix, HyperspectralScene, ParameterError, as_matrix

DEFAULT_NEIGHBORS = 5
_ROW_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class PixelGraph:
    """Undirected 0-1 weighted graph over the pixels of a scene.

    ``weights`` is a symmetric CSR matrix with an empty diagonal and
    ``degrees`` holds its row sums.
    """

    weights: sp.csr_matrix
    neighbors_per_node: int

    def __post_init__(self):
        W = sp.csr_matrix(self.weights, dtype=float)
        W.sum_duplicates()
        W.sort_indices()
        object.__setattr__(self, "weights", W)
        deg = np.asarray(W.sum(axis=1)).ravel()
        deg.setflags(write=False)
        object.__setattr__(self, "_degrees", deg)

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def edge_count(self) -> int:
        return int(sp.triu(self.weights, k=1).nnz)

    def edges(self) -> list[tuple[int, int, float]]:
        """Undirected edges as ``(j, l, weight)`` with ``j < l``."""
        upper = sp.triu(self.weights, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return [(int(upper.row[i]), int(upper.col[i]), float(upper.data[i])) for i in order]


def knn_graph(scene: HyperspectralScene | np.ndarray, p: int = DEFAULT_NEIGHBORS,
              scheme: str = "zero_one") -> PixelGraph:
    """Connect each pixel to its ``p`` spectrally closest pixels.

    Directed choices are symmetrized by union. Distance ties go to the lower
    pixel index.
    """
    if scheme != "zero_one":
        raise ParameterError(f"unsupported weighting scheme {scheme!r}")
    Y = as_matrix(scene)
    M = Y.shape[1]
    p = int(p)
    if p < 1:
        raise ParameterError(f"neighbors must be >= 1, got {p}")
    if p >= M:
        raise ParameterError(f"neighbors must be < pixel count ({M}), got {p}")

    X = Y.T
    rows = np.repeat(np.arange(M), p)
    cols = np.empty(M * p, dtype=np.int64)
    for start in range(0, M, _ROW_CHUNK):
        stop = min(start + _ROW_CHUNK, M)
        d = cdist(X[start:stop], X, metric="sqeuclidean")
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        # stable sort keeps lowest index first among equal distances
        nearest = np.argsort(d, axis=1, kind="stable")[:, :p]
        cols[start * p:stop * p] = nearest.ravel()

    directed = sp.coo_matrix((np.ones(M * p), (rows, cols)), shape=(M, M)).tocsr()
    directed.data[:] = 1.0
    undirected = directed.maximum(directed.T)
    return PixelGraph(undirected.tocsr(), p)


def laplacian(graph: PixelGraph) -> sp.csr_matrix:
    """``D - W`` as a sparse matrix."""
    return (sp.diags(graph.degrees) - graph.weights).tocsr()


def graph_regularizer(H: AbundanceMatrix | np.ndarray, graph: PixelGraph) -> float:
    """Half the weighted sum of squared differences over ordered pixel pairs."""
    Z = as_matrix(H)
    if Z.shape[1] != graph.size:
        raise ParameterError(f"H has {Z.shape[1]} columns but graph has {graph.size} nodes")
    coo = graph.weights.tocoo()
    diff = Z[:, coo.row] - Z[:, coo.col]
    return 0.5 * float(np.sum(coo.data * np.sum(diff * diff, axis=0)))


def graph_regularizer_trace(H: AbundanceMatrix | np.ndarray, graph: PixelGraph) -> float:
    """Same quantity via ``trace(H L H^T)``."""
    Z = as_matrix(H)
    if Z.shape[1] != graph.size:
        raise ParameterError(f"H has {Z.shape[1]} columns but graph has {graph.size} nodes")
    L = laplacian(graph)
    return float(np.sum((L @ Z.T) * Z.T))


def write_edge_list(graph: PixelGraph, path: str | Path) -> None:
    with open(path, "w") as fh:
        for j, l, w in graph.edges():
            fh.write(f"{j} {l} {w:g}\n")


def read_edge_list(path: str | Path, size: int, neighbors_per_node: int = 0) -> PixelGraph:
    rows, cols, vals = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise ParameterError(f"{path}:{lineno}: expected 'j l weight'")
            j, l, w = int(parts[0]), int(parts[1]), float(parts[2])
            rows += [j, l]
            cols += [l, j]
            vals += [w, w]
    W = sp.coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()
    return PixelGraph(W, neighbors_per_node)
