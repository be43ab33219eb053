"""Mean-imputation baselines: best single view (BSV) and concatenation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from imcgrmf.clustering import KMeansParams, kmeans
from imcgrmf.dataset import DatasetError, MultiViewDataset
from imcgrmf.metrics import evaluate

__all__ = ["BSVResult", "FilledDataset", "bsv_cluster", "concat_cluster", "mean_fill"]


@dataclass(frozen=True, eq=False)
class FilledDataset:
    """Complete per-view matrices (n rows each, assembled sample order).

    ``imputed[i, k]`` is True when row ``i`` of view ``k`` was filled in.
    """

    views: tuple
    imputed: np.ndarray
    labels: np.ndarray | None = None

    @property
    def n_samples(self) -> int:
        return self.imputed.shape[0]


def mean_fill(dataset: MultiViewDataset | FilledDataset) -> FilledDataset:
    """Fill every missing view row with the mean of the observed rows of that view."""
    if isinstance(dataset, FilledDataset):
        return dataset
    n, v = dataset.n_samples, dataset.n_views
    views = []
    imputed = np.ones((n, v), dtype=bool)
    for k, x in enumerate(dataset.views):
        if x.shape[0] == 0:
            raise DatasetError(f"view {k} has no observed samples")
        pos = dataset.view_positions(k)
        full = np.empty((n, x.shape[1]))
        full[:] = x.mean(axis=0)
        full[pos] = x
        imputed[pos, k] = False
        views.append(full)
    return FilledDataset(views=tuple(views), imputed=imputed, labels=dataset.labels)


@dataclass
class BSVResult:
    labels: np.ndarray
    view: int
    view_metrics: list = field(default_factory=list)
    flagged: bool = False


def _kmeans_params(c, seed, kmeans_params):
    if kmeans_params is None:
        return KMeansParams(clusters=c, seed=seed)
    return KMeansParams(
        clusters=c, restarts=kmeans_params.restarts, max_iter=kmeans_params.max_iter, seed=seed
    )


def bsv_cluster(dataset, c: int, seed: int = 0, kmeans_params: KMeansParams | None = None) -> BSVResult:
    """k-means on each mean-filled view; keep the view with the highest ACC.

    Ties go to the lower view index. Without labels the first view is
    returned and ``flagged`` is set.
    """
    filled = mean_fill(dataset)
    params = _kmeans_params(c, seed, kmeans_params)
    per_view = [kmeans(x, params) for x in filled.views]
    if filled.labels is None:
        return BSVResult(labels=per_view[0], view=0, view_metrics=[], flagged=True)
    scores = [evaluate(lab, filled.labels) for lab in per_view]
    best = max(range(len(per_view)), key=lambda k: (scores[k]["acc"], -k))
    return BSVResult(labels=per_view[best], view=best, view_metrics=scores)


def concat_cluster(dataset, c: int, seed: int = 0, kmeans_params: KMeansParams | None = None) -> np.ndarray:
    """k-means on the mean-filled views concatenated feature-wise."""
    filled = mean_fill(dataset)
    return kmeans(np.hstack(filled.views), _kmeans_params(c, seed, kmeans_params))
