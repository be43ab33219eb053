"""Repeated-split experiments, (lambda1, lambda2) grid search and reports."""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from imcgrmf.baselines import bsv_cluster, concat_cluster
from imcgrmf.clustering import KMeansParams, kmeans
from imcgrmf.dataset import MultiViewDataset, SplitSpec, load_views, make_incomplete_split, minmax_scale
from imcgrmf.metrics import evaluate
from imcgrmf.solver import ModelParams, assemble_representation, fit

log = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_LAMBDA1_GRID",
    "DEFAULT_LAMBDA2_GRID",
    "METHODS",
    "REPORT_SCHEMA",
    "ExperimentConfig",
    "ExperimentReport",
    "GridResult",
    "TrialResult",
    "grid_search",
    "run_experiment",
    "write_grid",
    "write_report",
]

METHODS = ("imcgrmf", "bsv", "concat")
DEFAULT_RATIOS = (0.1, 0.3, 0.5, 0.7, 0.9)
DEFAULT_LAMBDA1_GRID = tuple(float(10.0**e) for e in np.arange(0.0, 2.01, 0.5))
DEFAULT_LAMBDA2_GRID = tuple(float(10.0**e) for e in range(-5, 0))
METRICS = ("acc", "nmi", "purity")


@dataclass
class ExperimentConfig:
    """One experiment: a dataset, a method, and the split ratios to sweep.

    ``dataset`` is a directory path or an in-memory dataset. Trial ``t`` uses
    seed ``seed + t`` for the split, the initialisation and k-means.
    """

    dataset: object
    method: str = "imcgrmf"
    paired_ratios: tuple = DEFAULT_RATIOS
    trials: int = 5
    params: ModelParams | None = None
    kmeans: KMeansParams | None = None
    seed: int = 0
    output: str | None = None
    minmax: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        self.paired_ratios = tuple(float(r) for r in self.paired_ratios)
        for r in self.paired_ratios:
            if not 0.0 < r <= 1.0:
                raise ValueError(f"paired ratio {r} outside (0, 1]")


@dataclass
class TrialResult:
    method: str
    ratio: float
    trial: int
    seed: int
    acc: float = float("nan")
    nmi: float = float("nan")
    purity: float = float("nan")
    iterations: int = 0
    final_objective: float = float("nan")
    wall_time: float = 0.0
    ok: bool = True
    error: str = ""
    notes: tuple = ()
    trace: list = field(default_factory=list, repr=False)


@dataclass
class ExperimentReport:
    rows: list
    means: list
    config: dict

    def cell(self, method: str, ratio: float) -> dict:
        for m in self.means:
            if m["method"] == method and np.isclose(m["ratio"], ratio):
                return m
        raise KeyError((method, ratio))


def _load(config: ExperimentConfig) -> MultiViewDataset:
    data = config.dataset
    if not isinstance(data, MultiViewDataset):
        data = load_views(data)
    if config.minmax:
        data = minmax_scale(data)
    if data.labels is None:
        raise ValueError("experiments need ground-truth labels (labels.csv)")
    return data


def _run_trial(config, data, ratio, trial) -> TrialResult:
    seed = config.seed + trial
    row = TrialResult(method=config.method, ratio=ratio, trial=trial, seed=seed)
    c = data.n_clusters
    km = config.kmeans or KMeansParams(clusters=c)
    km = replace(km, clusters=c, seed=seed)
    start = time.perf_counter()
    try:
        split = make_incomplete_split(data, SplitSpec(ratio, seed)) if data.is_complete else data
        row.notes = split.notes
        if config.method == "imcgrmf":
            params = config.params or ModelParams(latent_dim=c)
            state = fit(split, replace(params, seed=seed))
            labels = kmeans(assemble_representation(state, split), km)
            row.iterations = state.iterations
            row.final_objective = state.trace[-1].total
            row.trace = [asdict(t) | {"total": t.total} for t in state.trace]
        elif config.method == "bsv":
            labels = bsv_cluster(split, c, seed, km).labels
        else:
            labels = concat_cluster(split, c, seed, km)
        scores = evaluate(labels, split.labels)
        row.acc, row.nmi, row.purity = scores["acc"], scores["nmi"], scores["purity"]
    except Exception as exc:  # recorded per cell; the sweep goes on
        log.warning("trial failed (%s, ratio=%s, trial=%s): %s", config.method, ratio, trial, exc)
        row.ok = False
        row.error = f"{type(exc).__name__}: {exc}"
    row.wall_time = time.perf_counter() - start
    return row


def _config_summary(config: ExperimentConfig) -> dict:
    return {
        "dataset": config.dataset if isinstance(config.dataset, (str, Path)) else "<in-memory>",
        "method": config.method,
        "paired_ratios": list(config.paired_ratios),
        "trials": config.trials,
        "seed": config.seed,
        "params": asdict(config.params) if config.params else None,
        "kmeans": asdict(config.kmeans) if config.kmeans else None,
        "minmax": config.minmax,
    }


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Split, fit (or run a baseline), cluster and score every (ratio, trial).

    An incomplete input dataset is used as given, in a single cell whose
    ratio is its paired fraction. Reports are written when
    ``config.output`` is set.
    """
    data = _load(config)
    ratios = config.paired_ratios if data.is_complete else (data.n_paired / data.n_samples,)
    rows, means = [], []
    for ratio in ratios:
        cell = [_run_trial(config, data, ratio, t) for t in range(config.trials)]
        rows.extend(cell)
        good = [r for r in cell if r.ok]
        mean = {"method": config.method, "ratio": ratio, "n_ok": len(good), "valid": bool(good)}
        for key in METRICS + ("iterations", "final_objective", "wall_time"):
            mean[key] = float(np.mean([getattr(r, key) for r in good])) if good else float("nan")
        means.append(mean)
    report = ExperimentReport(rows=rows, means=means, config=_config_summary(config))
    if config.output:
        write_report(report, config.output)
    return report


@dataclass
class GridResult:
    best: ModelParams
    table: list
    reports: dict = field(default_factory=dict, repr=False)


def grid_search(config: ExperimentConfig, lambda1_grid=DEFAULT_LAMBDA1_GRID, lambda2_grid=DEFAULT_LAMBDA2_GRID) -> GridResult:
    """Evaluate every (lambda1, lambda2) pair and keep the highest mean ACC.

    All cells use the config's own splits and seeds. Ties go to the smaller
    lambda1, then the smaller lambda2.
    """
    if not lambda1_grid or not lambda2_grid:
        raise ValueError("grids must be non-empty")
    data = _load(config)
    base = config.params or ModelParams(latent_dim=data.n_clusters)
    table, reports = [], {}
    best, best_acc = None, -np.inf
    for l1 in sorted(float(x) for x in lambda1_grid):
        for l2 in sorted(float(x) for x in lambda2_grid):
            params = replace(base, lambda1=l1, lambda2=l2)
            cfg = replace(config, dataset=data, method="imcgrmf", params=params, output=None, minmax=False)
            report = run_experiment(cfg)
            reports[(l1, l2)] = report
            good = [r for r in report.rows if r.ok]
            row = {"lambda1": l1, "lambda2": l2, "n_ok": len(good)}
            for key in METRICS:
                row[key] = float(np.mean([getattr(r, key) for r in good])) if good else float("nan")
            table.append(row)
            if good and row["acc"] > best_acc:
                best, best_acc = params, row["acc"]
    if best is None:
        raise RuntimeError("every grid cell failed")
    result = GridResult(best=best, table=table, reports=reports)
    if config.output:
        write_grid(result, config.output)
    return result


# -- reports -----------------------------------------------------------------

_ROW_FIELDS = (
    "method", "ratio", "trial", "seed", "acc", "nmi", "purity",
    "iterations", "final_objective", "wall_time", "ok", "error",
)

REPORT_SCHEMA = {
    "type": "object",
    "required": ["config", "trials", "means"],
    "properties": {
        "config": {"type": "object"},
        "trials": {
            "type": "array",
            "items": {
                "type": "object",
                "required": list(_ROW_FIELDS) + ["trace"],
                "properties": {
                    "method": {"enum": list(METHODS)},
                    "ratio": {"type": "number"},
                    "trial": {"type": "integer", "minimum": 0},
                    "seed": {"type": "integer"},
                    "acc": {"type": ["number", "null"]},
                    "nmi": {"type": ["number", "null"]},
                    "purity": {"type": ["number", "null"]},
                    "iterations": {"type": "integer", "minimum": 0},
                    "final_objective": {"type": ["number", "null"]},
                    "wall_time": {"type": "number", "minimum": 0},
                    "ok": {"type": "boolean"},
                    "error": {"type": "string"},
                    "trace": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["total", "reconstruction", "consensus", "sparsity"],
                        },
                    },
                },
            },
        },
        "means": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["method", "ratio", "n_ok", "valid"] + list(METRICS),
            },
        },
    },
}


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _nan_to_none(v):
    return None if isinstance(v, float) and np.isnan(v) else v


def _trace_name(row: TrialResult) -> str:
    return f"trace_{row.method}_r{row.ratio:g}_t{row.trial}.csv"


def write_report(report: ExperimentReport, path) -> Path:
    """Write ``results.csv``, ``results.json`` and ``traces/*.csv`` under ``path``.

    ``results.csv`` holds one row per trial and one ``trial=mean`` row per
    (method, ratio) cell; floats are written with ``repr`` so they read back
    exactly.
    """
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        with (path / "results.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(_ROW_FIELDS)
            for r in report.rows:
                w.writerow([_fmt(getattr(r, f)) for f in _ROW_FIELDS])
            for m in report.means:
                w.writerow([
                    m["method"], _fmt(m["ratio"]), "mean", "", _fmt(m["acc"]), _fmt(m["nmi"]),
                    _fmt(m["purity"]), _fmt(m["iterations"]), _fmt(m["final_objective"]),
                    _fmt(m["wall_time"]), _fmt(m["valid"]), "",
                ])
        payload = {
            "config": report.config,
            "trials": [
                {f: _nan_to_none(getattr(r, f)) for f in _ROW_FIELDS}
                | {"notes": list(r.notes), "trace": r.trace}
                for r in report.rows
            ],
            "means": [{k: _nan_to_none(v) for k, v in m.items()} for m in report.means],
        }
        (path / "results.json").write_text(json.dumps(payload, indent=2))
        traces = path / "traces"
        traces.mkdir(exist_ok=True)
        for r in report.rows:
            if not r.trace:
                continue
            with (traces / _trace_name(r)).open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["iteration", "total", "reconstruction", "consensus", "sparsity"])
                for i, t in enumerate(r.trace):
                    w.writerow([i] + [repr(float(t[k])) for k in ("total", "reconstruction", "consensus", "sparsity")])
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def write_grid(result: GridResult, path) -> Path:
    """``grid.csv`` (one row per cell, plot-ready) and ``best.json``."""
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        fields = ("lambda1", "lambda2", "n_ok") + METRICS
        with (path / "grid.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(fields)
            for row in result.table:
                w.writerow([_fmt(row[f]) for f in fields])
        (path / "best.json").write_text(json.dumps(asdict(result.best), indent=2))
    except OSError as exc:
        raise OSError(f"cannot write grid results to {path}: {exc}") from exc
    return path
