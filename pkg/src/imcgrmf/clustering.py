"""k-means (k-means++ seeding, Lloyd iterations, best of several restarts)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["KMeansParams", "KMeansResult", "kmeans", "kmeans_fit", "wcss"]


@dataclass(frozen=True)
class KMeansParams:
    clusters: int
    restarts: int = 20
    max_iter: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.clusters < 1:
            raise ValueError("clusters must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    history: list = field(default_factory=list)


def wcss(points: np.ndarray, labels: np.ndarray) -> float:
    """Within-cluster sum of squared distances to the cluster means."""
    points = np.asarray(points, dtype=float)
    total = 0.0
    for c in np.unique(labels):
        block = points[labels == c]
        total += float(((block - block.mean(axis=0)) ** 2).sum())
    return total


def _sq_dist(x, centers):
    d = (x * x).sum(1)[:, None] - 2.0 * x @ centers.T + (centers * centers).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _plusplus(x, c, rng):
    n = x.shape[0]
    centers = np.empty((c, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    closest = ((x - centers[0]) ** 2).sum(1)
    for j in range(1, c):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers[j] = x[idx]
        closest = np.minimum(closest, ((x - centers[j]) ** 2).sum(1))
    return centers


def _lloyd(x, centers, max_iter):
    c = centers.shape[0]
    history = []
    labels = None
    for _ in range(max_iter):
        d = _sq_dist(x, centers)
        new = d.argmin(axis=1)
        # repair empty clusters with the point farthest from its centre
        for j in range(c):
            if not np.any(new == j):
                own = d[np.arange(x.shape[0]), new]
                sizes = np.bincount(new, minlength=c)
                own[sizes[new] < 2] = -1.0
                far = int(own.argmax())
                new[far] = j
                d[far] = 0.0
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centers = np.vstack([x[labels == j].mean(axis=0) for j in range(c)])
        history.append(float(((x - centers[labels]) ** 2).sum()))
    return labels, centers, history[-1], history


def kmeans_fit(points, params: KMeansParams) -> KMeansResult:
    """Best (lowest WCSS) of ``params.restarts`` seeded Lloyd runs.

    Restart seeds are spawned from ``params.seed``, so results are
    reproducible. Ties in WCSS keep the earlier restart.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    c = params.clusters
    if n < c:
        raise ValueError(f"need at least {c} points, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points have non-finite entries")
    best = None
    for child in np.random.SeedSequence(params.seed).spawn(params.restarts):
        rng = np.random.default_rng(child)
        labels, centers, inertia, history = _lloyd(x, _plusplus(x, c, rng), params.max_iter)
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels=labels, centers=centers, inertia=inertia, history=history)
    return best


def kmeans(points, params: KMeansParams) -> np.ndarray:
    """Cluster ids (0..c-1) of each row of ``points``."""
    return kmeans_fit(points, params).labels
