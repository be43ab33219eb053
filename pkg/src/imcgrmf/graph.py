"""Binary symmetric nearest-neighbour graphs for each view."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

__all__ = ["NeighborGraph", "default_neighbor_count", "knn_graph", "write_edge_list"]


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Weights ``W`` (CSR, 0/1, symmetric, unit diagonal) and degrees ``D_ii``."""

    weights: sp.csr_matrix
    degrees: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    def dense(self) -> np.ndarray:
        return self.weights.toarray()


def knn_graph(view_matrix, neighbors: int) -> NeighborGraph:
    """Union kNN graph with self-loops.

    ``W[i, j] = 1`` when ``i`` is one of the ``neighbors`` nearest samples of
    ``j`` (Euclidean distance) or vice versa, and ``W[i, i] = 1`` for all
    ``i``. Equal distances are resolved in favour of the lower sample index.
    """
    x = np.asarray(view_matrix, dtype=float)
    if x.ndim != 2:
        raise ValueError("view_matrix must be 2-D")
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least 2 samples to build a neighbour graph")
    if not 1 <= neighbors < n:
        raise ValueError(f"neighbors must lie in [1, {n - 1}], got {neighbors}")
    if not np.all(np.isfinite(x)):
        raise ValueError("view_matrix has non-finite entries")

    dist = cdist(x, x, metric="sqeuclidean")
    np.fill_diagonal(dist, np.inf)
    # stable sort keeps the lower index first among equal distances
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :neighbors]

    rows = np.repeat(np.arange(n), neighbors)
    knn = sp.csr_matrix((np.ones(rows.size), (rows, nearest.ravel())), shape=(n, n))
    w = knn.maximum(knn.T) + sp.identity(n, format="csr")
    w = w.tocsr()
    w.data[:] = 1.0
    w.sort_indices()
    degrees = np.asarray(w.sum(axis=1)).ravel()
    return NeighborGraph(weights=w, degrees=degrees)


def default_neighbor_count(n: int, c: int) -> int:
    """Neighbour count heuristic from samples-per-cluster ``m = n // c``.

    10 when ``m >= 30``; otherwise ``m - 4`` clipped to ``[2, 10]``.
    """
    if not n >= c >= 1:
        raise ValueError(f"need n >= c >= 1, got n={n}, c={c}")
    m = n // c
    if m >= 30:
        return 10
    return max(min(m - 4, 10), 2)


def write_edge_list(graph: NeighborGraph, path) -> Path:
    """Dump the upper-triangular edges ``i,j`` (self-loops included) as CSV."""
    path = Path(path)
    upper = sp.triu(graph.weights).tocoo()
    order = np.lexsort((upper.col, upper.row))
    edges = np.column_stack([upper.row[order], upper.col[order]])
    np.savetxt(path, edges, delimiter=",", fmt="%d", header="i,j", comments="")
    return path
