"""Alternating minimisation for graph regularized incomplete multi-view MF.

For every view ``k`` the model factorises ``X_k ~ P_k U_k`` with a
row-orthonormal basis ``U_k`` (K x m_k). Each reconstruction is gated by the
view's kNN graph, the paired rows of every ``P_k`` are pulled towards a
shared consensus ``Pc``, and an l1 penalty keeps the representations
sparse::

    f = sum_k sum_ij W_k[i, j] ||x_i - p_j U_k||^2
        + lambda1 sum_k ||P_k[:n_c] - Pc||_F^2
        + lambda2 sum_k ||P_k||_1

One sweep updates, view by view, ``U_k`` (orthogonal Procrustes) and then
``P_k`` (row-wise soft thresholding), and finally ``Pc`` (mean of the paired
blocks). Each step solves its subproblem exactly, so ``f`` never increases.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from imcgrmf.dataset import MultiViewDataset
from imcgrmf.graph import NeighborGraph, default_neighbor_count, knn_graph

__all__ = [
    "ModelParams",
    "ModelState",
    "ObjectiveTerms",
    "SolverError",
    "assemble_representation",
    "build_graphs",
    "data_constant",
    "fit",
    "init_state",
    "load_state",
    "objective",
    "project_sample",
    "recover_view",
    "save_state",
    "soft_threshold",
    "update_basis",
    "update_consensus",
    "update_representation",
    "working_objective",
    "write_trace",
]


class SolverError(ArithmeticError):
    """Raised when an update cannot be carried out (zero degree, NaN, ...)."""


@dataclass(frozen=True)
class ModelParams:
    """Hyper-parameters of one fit.

    ``neighbors="auto"`` picks :func:`default_neighbor_count` from the
    sample count of each view and the number of classes (``latent_dim`` when
    the dataset has no labels).
    """

    latent_dim: int
    lambda1: float = 10.0
    lambda2: float = 1e-3
    neighbors: int | str = "auto"
    max_iter: int = 200
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda1 and lambda2 must be non-negative")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.neighbors != "auto" and (
            not isinstance(self.neighbors, (int, np.integer)) or self.neighbors < 1
        ):
            raise ValueError("neighbors must be a positive int or 'auto'")

    def check_dataset(self, dataset: MultiViewDataset):
        smallest = min(dataset.feature_dims)
        if self.latent_dim > smallest:
            raise ValueError(
                f"latent_dim={self.latent_dim} exceeds the smallest view dimension {smallest}"
            )


@dataclass(frozen=True)
class ObjectiveTerms:
    reconstruction: float
    consensus: float
    sparsity: float

    @property
    def total(self) -> float:
        return self.reconstruction + self.consensus + self.sparsity


@dataclass
class ModelState:
    bases: list
    representations: list
    consensus: np.ndarray
    trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    @property
    def objective_trace(self) -> np.ndarray:
        return np.array([t.total for t in self.trace])

    def copy(self) -> "ModelState":
        return ModelState(
            bases=[u.copy() for u in self.bases],
            representations=[p.copy() for p in self.representations],
            consensus=self.consensus.copy(),
            trace=list(self.trace),
            iterations=self.iterations,
            converged=self.converged,
        )


# -- elementary updates ------------------------------------------------------


def soft_threshold(x, t):
    """Shrinkage ``sign(x) * max(|x| - t, 0)``; works on scalars and arrays."""
    t = np.asarray(t)
    if np.any(t < 0):
        raise ValueError("threshold must be non-negative")
    out = np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def _complete_orthonormal(q: np.ndarray, count: int) -> np.ndarray:
    """Append ``count`` orthonormal columns to ``q`` (d x r).

    Candidates are the standard basis vectors in index order, accepted by
    Gram-Schmidt when their residual is not negligible.
    """
    d = q.shape[0]
    cols = [q[:, i] for i in range(q.shape[1])]
    for i in range(d):
        if len(cols) == q.shape[1] + count:
            break
        e = np.zeros(d)
        e[i] = 1.0
        for _ in range(2):
            for c in cols:
                e -= (c @ e) * c
        norm = np.linalg.norm(e)
        if norm > 1e-8:
            cols.append(e / norm)
    return np.column_stack(cols) if cols else np.zeros((d, 0))


def procrustes_basis(s: np.ndarray) -> np.ndarray:
    """Row-orthonormal ``U`` (K x m) maximising ``trace(S U)`` for ``S`` (m x K)."""
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise SolverError("non-finite matrix in basis update")
    m, k = s.shape
    if k > m:
        raise ValueError(f"latent dim {k} exceeds feature dim {m}")
    b, sigma, jt = np.linalg.svd(s, full_matrices=False)
    tol = max(m, k) * np.finfo(float).eps * (sigma[0] if sigma.size else 0.0)
    r = int(np.sum(sigma > tol))
    if r == k:
        return jt.T @ b.T
    # rank deficient: keep the determined directions, complete the rest
    b_full = _complete_orthonormal(b[:, :r], k - r)
    j_full = _complete_orthonormal(jt[:r].T, k - r)
    return j_full @ b_full.T


def update_basis(x: np.ndarray, graph: NeighborGraph | np.ndarray, p: np.ndarray) -> np.ndarray:
    """Basis update: Procrustes solution for ``S = X^T W P``.

    With the thin SVD ``S = B diag(s) J^T`` the optimum is ``U = J B^T`` and
    ``trace(S U) = sum(s)``.
    """
    w = graph.weights if isinstance(graph, NeighborGraph) else graph
    return procrustes_basis(np.asarray(x).T @ (w @ p))


def update_representation(x, graph: NeighborGraph, consensus, basis, lambda1, lambda2, wx=None):
    """Exact row-wise minimiser of the representation subproblem.

    Row ``i`` minimises ``M_ii ||p - a_i / M_ii||^2 + lambda2 ||p||_1`` with
    ``a_i`` the i-th row of ``W X U^T + lambda1 G^T Pc`` and
    ``M = D + lambda1 G^T G``; the solution is soft thresholding of
    ``a_i / M_ii`` at ``lambda2 / (2 M_ii)``.

    ``consensus`` has one row per paired sample; those are the leading rows of
    ``x``. ``wx`` may carry a precomputed ``W @ x``.
    """
    if wx is None:
        wx = graph.weights @ np.asarray(x)
    n_c = consensus.shape[0]
    a = wx @ basis.T
    a[:n_c] += lambda1 * consensus
    m = graph.degrees.astype(float)
    m[:n_c] += lambda1
    if np.any(m <= 0):
        bad = int(np.flatnonzero(m <= 0)[0])
        raise SolverError(f"row {bad} has zero weight; graph needs self-loops")
    target = a / m[:, None]
    return soft_threshold(target, (lambda2 / (2.0 * m))[:, None])


def update_consensus(paired_blocks) -> np.ndarray:
    """Mean of the paired blocks ``G_k P_k`` over views."""
    blocks = [np.asarray(b, dtype=float) for b in paired_blocks]
    return np.mean(blocks, axis=0)


# -- objective ---------------------------------------------------------------


class _ViewCache:
    """Per-view constants reused across sweeps."""

    def __init__(self, x: np.ndarray, graph: NeighborGraph):
        self.x = x
        self.graph = graph
        self.wx = graph.weights @ x
        self.const = float(graph.degrees @ np.einsum("ij,ij->i", x, x))

    def reconstruction(self, p, u) -> float:
        # sum_ij w_ij ||x_i - r_j||^2 = sum_i d_i|x_i|^2 + sum_j d_j|r_j|^2 - 2<WX, R>
        r = p @ u
        val = self.const + self.graph.degrees @ np.einsum("ij,ij->i", r, r)
        return float(val - 2.0 * np.einsum("ij,ij->", self.wx, r))


def _terms(caches, state: ModelState, lambda1: float, lambda2: float) -> ObjectiveTerms:
    n_c = state.consensus.shape[0]
    rec = sum(c.reconstruction(p, u) for c, p, u in zip(caches, state.representations, state.bases))
    cons = sum(float(np.sum((p[:n_c] - state.consensus) ** 2)) for p in state.representations)
    l1 = sum(float(np.abs(p).sum()) for p in state.representations)
    return ObjectiveTerms(reconstruction=rec, consensus=lambda1 * cons, sparsity=lambda2 * l1)


def objective(dataset: MultiViewDataset, graphs, state: ModelState, params: ModelParams) -> ObjectiveTerms:
    """The three objective terms at ``state``; ``.total`` is their sum."""
    caches = [_ViewCache(x, g) for x, g in zip(dataset.views, graphs)]
    return _terms(caches, state, params.lambda1, params.lambda2)


def data_constant(dataset: MultiViewDataset, graphs) -> float:
    """``sum_k trace(X_k^T D_k X_k)``, the part of the objective free of the model."""
    return sum(_ViewCache(x, g).const for x, g in zip(dataset.views, graphs))


def working_objective(dataset: MultiViewDataset, graphs, state: ModelState, params: ModelParams) -> float:
    """Objective with the data constant dropped and ``U U^T = I`` used:

    ``sum_k [tr(P_k^T D_k P_k) - 2 tr(X_k^T W_k P_k U_k)]`` plus the consensus
    and l1 terms.
    """
    n_c = state.consensus.shape[0]
    total = 0.0
    for x, g, p, u in zip(dataset.views, graphs, state.representations, state.bases):
        total += float(g.degrees @ np.einsum("ij,ij->i", p, p))
        total -= 2.0 * float(np.trace(x.T @ (g.weights @ p) @ u))
        total += params.lambda1 * float(np.sum((p[:n_c] - state.consensus) ** 2))
        total += params.lambda2 * float(np.abs(p).sum())
    return total


# -- driver ------------------------------------------------------------------


def resolve_neighbors(params: ModelParams, dataset: MultiViewDataset, view: int) -> int:
    rows = dataset.views[view].shape[0]
    if params.neighbors == "auto":
        c = dataset.n_clusters or params.latent_dim
        k = default_neighbor_count(dataset.n_samples, min(c, dataset.n_samples))
    else:
        k = int(params.neighbors)
    return max(1, min(k, rows - 1))


def build_graphs(dataset: MultiViewDataset, params: ModelParams) -> list:
    return [knn_graph(x, resolve_neighbors(params, dataset, k)) for k, x in enumerate(dataset.views)]


def init_state(dataset: MultiViewDataset, params: ModelParams) -> ModelState:
    """Random start: ``P_k ~ U[0, 1)``, ``U_k`` random with orthonormal rows,
    ``Pc`` the mean of the paired blocks."""
    params.check_dataset(dataset)
    rng = np.random.default_rng(params.seed)
    k = params.latent_dim
    reps, bases = [], []
    for x in dataset.views:
        reps.append(rng.random((x.shape[0], k)))
        q, r = np.linalg.qr(rng.standard_normal((x.shape[1], k)))
        # sign fix makes the factor unique for a given draw
        bases.append((q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))).T)
    consensus = update_consensus([p[: dataset.n_paired] for p in reps])
    return ModelState(bases=bases, representations=reps, consensus=consensus)


Callback = Callable[[int, str, int, ModelState], None]


def fit(
    dataset: MultiViewDataset,
    params: ModelParams,
    graphs=None,
    callback: Callback | None = None,
) -> ModelState:
    """Run the alternating updates until the relative objective change drops
    below ``params.tol`` or ``params.max_iter`` sweeps are done.

    ``state.trace`` holds the objective terms at the start and after every
    sweep. ``callback(iteration, step, view, state)`` fires after each
    sub-update with ``step`` in ``{"basis", "representation", "consensus"}``
    (``view`` is -1 for the consensus step).
    """
    params.check_dataset(dataset)
    if graphs is None:
        graphs = build_graphs(dataset, params)
    caches = [_ViewCache(x, g) for x, g in zip(dataset.views, graphs)]
    state = init_state(dataset, params)
    lam1, lam2 = params.lambda1, params.lambda2
    n_c = dataset.n_paired

    def record():
        terms = _terms(caches, state, lam1, lam2)
        if not math.isfinite(terms.total):
            raise SolverError(
                f"objective became non-finite at iteration {state.iterations}: {terms}"
            )
        state.trace.append(terms)
        return terms.total

    prev = record()
    for it in range(1, params.max_iter + 1):
        for k, c in enumerate(caches):
            # W is symmetric, so X^T W P = (W X)^T P
            state.bases[k] = procrustes_basis(c.wx.T @ state.representations[k])
            if callback:
                callback(it, "basis", k, state)
            state.representations[k] = update_representation(
                c.x, c.graph, state.consensus, state.bases[k], lam1, lam2, wx=c.wx
            )
            if callback:
                callback(it, "representation", k, state)
        state.consensus = update_consensus([p[:n_c] for p in state.representations])
        if callback:
            callback(it, "consensus", -1, state)
        state.iterations = it
        cur = record()
        if abs(prev - cur) / max(prev, 1e-12) < params.tol:
            state.converged = True
            break
        prev = cur
    return state


def assemble_representation(state: ModelState, dataset: MultiViewDataset) -> np.ndarray:
    """Stack ``Pc`` and each view's unpaired rows, in assembled sample order."""
    n_c = dataset.n_paired
    return np.vstack([state.consensus] + [p[n_c:] for p in state.representations])


def project_sample(y, basis) -> np.ndarray:
    """Latent coordinates ``y U^T`` of new feature row(s) ``y`` of one view."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != basis.shape[1]:
        raise ValueError(f"expected {basis.shape[1]} features, got {y.shape[-1]}")
    return y @ basis.T


def recover_view(p, basis) -> np.ndarray:
    """Feature row(s) ``p U`` of a view from latent row(s) ``p``."""
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != basis.shape[0]:
        raise ValueError(f"expected {basis.shape[0]} latent entries, got {p.shape[-1]}")
    return p @ basis


# -- persistence -------------------------------------------------------------

_TRACE_HEADER = "iteration,total,reconstruction,consensus,sparsity"


def write_trace(state: ModelState, path) -> Path:
    path = Path(path)
    rows = [
        (i, t.total, t.reconstruction, t.consensus, t.sparsity) for i, t in enumerate(state.trace)
    ]
    with path.open("w") as fh:
        fh.write(_TRACE_HEADER + "\n")
        for i, *vals in rows:
            fh.write(f"{i}," + ",".join(repr(float(v)) for v in vals) + "\n")
    return path


def save_state(state: ModelState, params: ModelParams, path) -> Path:
    """Directory with ``basis_k.csv``, ``representation_k.csv``,
    ``consensus.csv``, ``trace.csv`` and ``manifest.json``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for k, (u, p) in enumerate(zip(state.bases, state.representations), start=1):
        np.savetxt(path / f"basis_{k}.csv", u, delimiter=",", fmt="%.17g")
        np.savetxt(path / f"representation_{k}.csv", p, delimiter=",", fmt="%.17g")
    np.savetxt(path / "consensus.csv", state.consensus, delimiter=",", fmt="%.17g")
    write_trace(state, path / "trace.csv")
    manifest = {
        "params": asdict(params),
        "seed": params.seed,
        "n_views": len(state.bases),
        "iterations": state.iterations,
        "converged": state.converged,
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return path


def load_state(path) -> tuple:
    """Inverse of :func:`save_state`; returns ``(state, params)``."""
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    params = ModelParams(**manifest["params"])
    v = manifest["n_views"]

    def read(name):
        return np.loadtxt(path / name, delimiter=",", ndmin=2)

    bases = [read(f"basis_{k}.csv") for k in range(1, v + 1)]
    reps = [read(f"representation_{k}.csv") for k in range(1, v + 1)]
    trace = []
    table = np.loadtxt(path / "trace.csv", delimiter=",", skiprows=1, ndmin=2)
    for row in table:
        trace.append(ObjectiveTerms(reconstruction=row[2], consensus=row[3], sparsity=row[4]))
    state = ModelState(
        bases=bases,
        representations=reps,
        consensus=read("consensus.csv"),
        trace=trace,
        iterations=manifest["iterations"],
        converged=manifest["converged"],
    )
    return state, params
