"""Multi-view datasets with paired / single-view samples.

Rows are samples. Inside a :class:`MultiViewDataset` every view stores its
paired samples first (the same ``n_paired`` samples, in the same order, in
every view), followed by the samples observed only in that view. The
*assembled* order used by labels, ``sample_ids`` and the learned
representation is::

    paired samples, view-0-only samples, view-1-only samples, ...

Views are indexed from 0 in the Python API; files on disk are named
``view_1.csv`` ... ``view_v.csv``.
"""

from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "DatasetError",
    "MultiViewDataset",
    "SplitSpec",
    "index_matrix",
    "load_views",
    "make_blobs_views",
    "make_incomplete_split",
    "minmax_scale",
    "write_views",
]

_VIEW_FILE = re.compile(r"^view_(\d+)\.csv$")
_ROUNDING = ("half_up", "floor", "ceil")


class DatasetError(ValueError):
    """Raised for malformed or unsupported multi-view data."""


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MultiViewDataset:
    """Per-view feature matrices with the paired rows leading every view.

    Parameters
    ----------
    views : sequence of (n_paired + n_k, m_k) arrays
    n_paired : int
        Number of samples observed in all views.
    labels : (n,) int array, optional
        Class ids in assembled order.
    sample_ids : (n,) int array, optional
        Original index of each assembled sample; defaults to ``arange(n)``.
    notes : tuple of str
        Free-form flags carried into reports (e.g. a split that ended up
        complete after rounding).
    """

    views: tuple
    n_paired: int
    labels: np.ndarray | None = None
    sample_ids: np.ndarray | None = None
    notes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.views) == 0:
            raise DatasetError("dataset needs at least one view")
        views = tuple(_frozen(np.atleast_2d(v)) for v in self.views)
        for k, v in enumerate(views):
            if v.ndim != 2:
                raise DatasetError(f"view {k} must be a 2-D matrix")
            if v.shape[0] == 0 or v.shape[1] == 0:
                raise DatasetError(f"view {k} is empty")
            if not np.all(np.isfinite(v)):
                raise DatasetError(f"view {k} has non-finite entries")
            if v.shape[0] < self.n_paired:
                raise DatasetError(
                    f"view {k} has {v.shape[0]} rows, fewer than n_paired={self.n_paired}"
                )
        if self.n_paired < 0:
            raise DatasetError("n_paired must be non-negative")
        object.__setattr__(self, "views", views)
        n = self.n_paired + sum(v.shape[0] - self.n_paired for v in views)
        if n == 0:
            raise DatasetError("dataset has no samples")

        ids = np.arange(n) if self.sample_ids is None else np.asarray(self.sample_ids)
        if ids.shape != (n,):
            raise DatasetError(f"sample_ids has length {ids.size}, expected {n}")
        if not np.array_equal(np.sort(ids), np.arange(n)):
            raise DatasetError("sample_ids must be a permutation of 0..n-1")
        object.__setattr__(self, "sample_ids", _frozen(ids, dtype=np.int64))

        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (n,):
                raise DatasetError(f"got {labels.size} labels for {n} samples")
            object.__setattr__(self, "labels", _frozen(labels, dtype=np.int64))
        object.__setattr__(self, "notes", tuple(self.notes))

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def unpaired_counts(self) -> tuple:
        return tuple(v.shape[0] - self.n_paired for v in self.views)

    @property
    def n_samples(self) -> int:
        return self.n_paired + sum(self.unpaired_counts)

    @property
    def feature_dims(self) -> tuple:
        return tuple(v.shape[1] for v in self.views)

    @property
    def is_complete(self) -> bool:
        return all(c == 0 for c in self.unpaired_counts)

    def unpaired_slice(self, view: int) -> slice:
        """Assembled-order positions of the samples seen only in ``view``."""
        start = self.n_paired + sum(self.unpaired_counts[:view])
        return slice(start, start + self.unpaired_counts[view])

    def view_positions(self, view: int) -> np.ndarray:
        """Assembled-order positions of the rows of ``view``."""
        s = self.unpaired_slice(view)
        return np.concatenate([np.arange(self.n_paired), np.arange(s.start, s.stop)])

    def mask(self) -> np.ndarray:
        """Presence mask (n, v) in original sample order."""
        m = np.zeros((self.n_samples, self.n_views), dtype=np.int64)
        for k in range(self.n_views):
            m[self.sample_ids[self.view_positions(k)], k] = 1
        return m

    def to_original_order(self, rows: np.ndarray) -> np.ndarray:
        """Reorder an assembled-order array so row i is original sample i."""
        rows = np.asarray(rows)
        out = np.empty_like(rows)
        out[self.sample_ids] = rows
        return out

    @property
    def n_clusters(self) -> int | None:
        if self.labels is None:
            return None
        return int(np.unique(self.labels).size)


@dataclass(frozen=True)
class SplitSpec:
    paired_ratio: float
    seed: int = 0
    rounding: str = "half_up"

    def __post_init__(self):
        if not 0.0 < self.paired_ratio <= 1.0:
            raise DatasetError(f"paired_ratio must lie in (0, 1], got {self.paired_ratio}")
        if self.rounding not in _ROUNDING:
            raise DatasetError(f"rounding must be one of {_ROUNDING}")

    def paired_count(self, n: int) -> int:
        x = self.paired_ratio * n
        if self.rounding == "floor":
            n_c = math.floor(x)
        elif self.rounding == "ceil":
            n_c = math.ceil(x)
        else:
            n_c = math.floor(x + 0.5)
        n_c = min(n_c, n)
        if n_c < 1:
            raise DatasetError(f"paired_ratio={self.paired_ratio} leaves no paired sample for n={n}")
        return n_c


def make_incomplete_split(complete: MultiViewDataset, spec: SplitSpec) -> MultiViewDataset:
    """Draw a paired set and hand the remaining samples to single views.

    ``round(ratio * n)`` samples, chosen uniformly by ``spec.seed``, keep all
    views. The rest, in shuffled order, are cut into consecutive chunks, one
    per view, with sizes differing by at most one (earlier views get the
    extra sample). For two views that is ``ceil(r/2)`` view-0-only samples
    and ``floor(r/2)`` view-1-only samples.
    """
    if not complete.is_complete:
        raise DatasetError("make_incomplete_split needs a complete dataset")
    n, v = complete.n_samples, complete.n_views
    n_c = spec.paired_count(n)
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    paired, rest = perm[:n_c], perm[n_c:]
    r = rest.size
    sizes = [r // v + (1 if k < r % v else 0) for k in range(v)]
    chunks = np.split(rest, np.cumsum(sizes)[:-1])

    views = tuple(
        complete.views[k][np.concatenate([paired, chunks[k]])] for k in range(v)
    )
    order = np.concatenate([paired, *chunks])
    labels = None if complete.labels is None else complete.labels[order]
    notes = list(complete.notes)
    if spec.paired_ratio < 1.0 and n_c == n:
        notes.append(f"paired_ratio={spec.paired_ratio} rounded to a complete split (n={n})")
    return MultiViewDataset(
        views=views,
        n_paired=n_c,
        labels=labels,
        sample_ids=complete.sample_ids[order],
        notes=tuple(notes),
    )


def index_matrix(dataset: MultiViewDataset, view: int) -> np.ndarray:
    """Binary selector of the paired block of ``view``: ``G[i, j] = (i == j)``."""
    if not 0 <= view < dataset.n_views:
        raise IndexError(f"view {view} out of range for {dataset.n_views} views")
    rows = dataset.views[view].shape[0]
    return np.eye(dataset.n_paired, rows)


def minmax_scale(dataset: MultiViewDataset) -> MultiViewDataset:
    """Per-feature min-max scaling to [0, 1]; constant features map to 0."""
    scaled = []
    for v in dataset.views:
        lo, hi = v.min(axis=0), v.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        scaled.append((v - lo) / span)
    return MultiViewDataset(
        views=tuple(scaled),
        n_paired=dataset.n_paired,
        labels=dataset.labels,
        sample_ids=dataset.sample_ids,
        notes=dataset.notes,
    )


# -- files -------------------------------------------------------------------


def _read_matrix(path: Path, dtype=float) -> np.ndarray:
    text = path.read_text()
    if not text.strip():
        raise DatasetError(f"{path}: file is empty")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            return np.loadtxt(path, delimiter=",", ndmin=2, dtype=dtype)
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from None


def load_views(path) -> MultiViewDataset:
    """Read a dataset directory.

    Expected files: ``view_1.csv`` ... ``view_v.csv``, ``mask.csv`` and
    optionally ``labels.csv`` and ``split_meta.json``. A view file holds
    either one row per sample (rows of absent samples are ignored and may
    be ``nan``) or only the rows of samples present in that view, in sample
    order. If ``split_meta.json`` records a ``permutation``, it fixes the
    order of samples inside the paired and single-view groups; otherwise
    original order is kept.
    """
    path = Path(path)
    if not path.is_dir():
        raise DatasetError(f"{path}: not a directory")
    found = {}
    for p in path.iterdir():
        m = _VIEW_FILE.match(p.name)
        if m:
            found[int(m.group(1))] = p
    if not found:
        raise DatasetError(f"{path}: no view_k.csv files")
    v = len(found)
    if sorted(found) != list(range(1, v + 1)):
        raise DatasetError(f"{path}: view files must be numbered 1..{v}, got {sorted(found)}")
    mask_path = path / "mask.csv"
    if not mask_path.exists():
        raise DatasetError(f"{path}: missing mask.csv")
    mask = _read_matrix(mask_path)
    if mask.shape[1] != v:
        raise DatasetError(f"mask.csv has {mask.shape[1]} columns for {v} views")
    if not np.isin(mask, (0, 1)).all():
        raise DatasetError("mask.csv entries must be 0 or 1")
    mask = mask.astype(bool)
    n = mask.shape[0]

    counts = mask.sum(axis=1)
    for i in np.flatnonzero(counts == 0):
        raise DatasetError(f"sample {i} has no view")
    partial = np.flatnonzero((counts > 1) & (counts < v))
    if partial.size:
        raise DatasetError(
            f"sample {partial[0]} is present in {counts[partial[0]]} of {v} views; "
            "only fully paired or single-view samples are supported"
        )

    raw = []
    for k in range(v):
        x = _read_matrix(found[k + 1])
        present = np.flatnonzero(mask[:, k])
        if present.size == 0:
            raise DatasetError(f"view {k + 1} is empty")
        if x.shape[0] == n:
            x = x[present]
        elif x.shape[0] != present.size:
            raise DatasetError(
                f"view_{k + 1}.csv has {x.shape[0]} rows; mask expects {n} or {present.size}"
            )
        if not np.all(np.isfinite(x)):
            raise DatasetError(f"view_{k + 1}.csv has non-finite entries in present rows")
        full = np.full((n, x.shape[1]), np.nan)
        full[present] = x
        raw.append(full)

    rank = np.arange(n)
    meta_path = path / "split_meta.json"
    if meta_path.exists():
        perm = json.loads(meta_path.read_text()).get("permutation")
        if perm is not None:
            perm = np.asarray(perm, dtype=np.int64)
            if not np.array_equal(np.sort(perm), np.arange(n)):
                raise DatasetError("split_meta.json permutation does not match sample count")
            rank[perm] = np.arange(n)

    def ordered(idx):
        return idx[np.argsort(rank[idx], kind="stable")]

    paired = ordered(np.flatnonzero(counts == v))
    singles = [ordered(np.flatnonzero((counts == 1) & mask[:, k])) for k in range(v)]
    if v == 1:
        singles = [np.empty(0, dtype=np.int64)]

    views = tuple(raw[k][np.concatenate([paired, singles[k]])] for k in range(v))
    order = np.concatenate([paired, *singles])

    labels = None
    labels_path = path / "labels.csv"
    if labels_path.exists():
        lab = _read_matrix(labels_path, dtype=float).ravel()
        if lab.size != n:
            raise DatasetError(f"labels.csv has {lab.size} rows for {n} samples")
        if not np.all(lab == np.round(lab)):
            raise DatasetError("labels.csv must hold integers")
        labels = lab.astype(np.int64)[order]

    return MultiViewDataset(views=views, n_paired=paired.size, labels=labels, sample_ids=order)


def write_views(dataset: MultiViewDataset, path, meta: dict | None = None) -> Path:
    """Write ``dataset`` in the directory format read by :func:`load_views`.

    Rows are written in original sample order with ``nan`` rows for absent
    samples; ``split_meta.json`` stores ``meta`` plus the assembled-order
    permutation so that reloading reproduces the dataset exactly.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    n = dataset.n_samples
    for k, x in enumerate(dataset.views):
        full = np.full((n, x.shape[1]), np.nan)
        full[dataset.sample_ids[dataset.view_positions(k)]] = x
        np.savetxt(path / f"view_{k + 1}.csv", full, delimiter=",", fmt="%.17g")
    np.savetxt(path / "mask.csv", dataset.mask(), delimiter=",", fmt="%d")
    if dataset.labels is not None:
        np.savetxt(path / "labels.csv", dataset.to_original_order(dataset.labels), fmt="%d")
    info = dict(meta or {})
    info["permutation"] = dataset.sample_ids.tolist()
    info["n_paired"] = dataset.n_paired
    info["unpaired_counts"] = list(dataset.unpaired_counts)
    if dataset.notes:
        info["notes"] = list(dataset.notes)
    (path / "split_meta.json").write_text(json.dumps(info, indent=2))
    return path


# -- synthetic data ----------------------------------------------------------


def make_blobs_views(
    n_samples: int = 150,
    n_clusters: int = 3,
    feature_dims=(20, 15),
    separation: float = 6.0,
    noise: float = 1.0,
    offset: float = 0.0,
    seed: int = 0,
) -> MultiViewDataset:
    """Complete multi-view Gaussian blobs sharing one cluster assignment.

    In every view the cluster centres are pairwise exactly
    ``separation * noise`` apart (a centred, scaled simplex in a random
    rotation) and samples get isotropic Gaussian noise with standard
    deviation ``noise``. ``offset`` shifts each view by a random vector of
    that per-coordinate scale; the factorisation has no intercept, so a
    shift costs one latent direction.
    """
    rng = np.random.default_rng(seed)
    labels = np.arange(n_samples) % n_clusters
    labels = labels[rng.permutation(n_samples)]
    views = []
    for m in feature_dims:
        if m < n_clusters:
            raise DatasetError(f"feature dim {m} < n_clusters {n_clusters}")
        q, _ = np.linalg.qr(rng.standard_normal((m, n_clusters)))
        centres = (separation * noise / math.sqrt(2.0)) * q.T
        centres -= centres.mean(axis=0)
        shift = rng.normal(scale=offset, size=m) if offset else np.zeros(m)
        x = centres[labels] + shift + rng.normal(scale=noise, size=(n_samples, m))
        views.append(x)
    return MultiViewDataset(views=tuple(views), n_paired=n_samples, labels=labels)
