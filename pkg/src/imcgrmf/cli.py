"""Command line entry point: ``imcgrmf <subcommand> [options]``.

Every option may also come from a TOML file given with ``--config``; keys
are the long option names (dashes or underscores). Command line values win.
On failure a single JSON line ``{"error": ..., "message": ...}`` is written
to stderr and the exit status is 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from imcgrmf.clustering import KMeansParams, kmeans
from imcgrmf.dataset import SplitSpec, load_views, make_blobs_views, make_incomplete_split, minmax_scale, write_views
from imcgrmf.graph import write_edge_list
from imcgrmf.harness import (
    DEFAULT_LAMBDA1_GRID,
    DEFAULT_LAMBDA2_GRID,
    DEFAULT_RATIOS,
    ExperimentConfig,
    grid_search,
    run_experiment,
)
from imcgrmf.metrics import evaluate
from imcgrmf.solver import ModelParams, assemble_representation, build_graphs, fit, save_state

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

DEFAULTS = {
    "input": None,
    "output": None,
    "labels": None,
    "lambda1": 10.0,
    "lambda2": 1e-3,
    "latent_dim": None,
    "neighbors": "auto",
    "paired_ratio": None,
    "trials": 5,
    "seed": 0,
    "max_iter": 200,
    "tol": 1e-6,
    "method": "imcgrmf",
    "clusters": None,
    "restarts": 20,
    "minmax": False,
    "lambda1_grid": None,
    "lambda2_grid": None,
    "dump_graph": False,
    "samples": 150,
    "separation": 6.0,
    "dims": "20,15",
}


def _floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    return [float(x) for x in str(text).split(",") if x.strip()]


def _neighbors(value):
    return value if value == "auto" else int(value)


def _add_common(p: argparse.ArgumentParser):
    a = p.add_argument
    # defaults stay None so that config-file values are only overridden by explicit flags
    a("--config", help="TOML file with option values")
    a("--input", help="dataset directory (or a matrix CSV for `cluster`)")
    a("--output", help="output file or directory")
    a("--lambda1", type=float)
    a("--lambda2", type=float)
    a("--latent-dim", type=int)
    a("--neighbors", help="neighbour count or 'auto'")
    a("--paired-ratio", help="fraction(s) of paired samples, comma separated")
    a("--trials", type=int)
    a("--seed", type=int)
    a("--max-iter", type=int)
    a("--tol", type=float)
    a("--method", choices=("imcgrmf", "bsv", "concat"))
    a("--clusters", type=int)
    a("--restarts", type=int)
    a("--minmax", action="store_true", default=None, help="min-max scale each feature")
    a("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="imcgrmf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="make an incomplete split of a complete dataset")
    _add_common(p)

    p = sub.add_parser("fit", help="fit the model and write its state and representation")
    _add_common(p)
    p.add_argument("--dump-graph", action="store_true", default=None, help="also write kNN edge lists")

    p = sub.add_parser("cluster", help="k-means on a representation CSV")
    _add_common(p)

    p = sub.add_parser("evaluate", help="score predicted labels against ground truth")
    _add_common(p)
    p.add_argument("--labels", help="ground-truth labels CSV")

    p = sub.add_parser("experiment", help="repeated-split experiment for one method")
    _add_common(p)

    p = sub.add_parser("grid", help="grid search over lambda1 x lambda2")
    _add_common(p)
    p.add_argument("--lambda1-grid", help="comma separated lambda1 values")
    p.add_argument("--lambda2-grid", help="comma separated lambda2 values")

    p = sub.add_parser("synth", help="write a synthetic multi-view Gaussian blob dataset")
    _add_common(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--separation", type=float)
    p.add_argument("--dims", help="feature dims per view, comma separated")
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    """Defaults < config file < explicit flags."""
    opts = dict(DEFAULTS)
    if args.config:
        with open(args.config, "rb") as fh:
            file_opts = tomllib.load(fh)
        for key, value in file_opts.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise ValueError(f"unknown config key {key!r}")
            opts[key] = value
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            opts[key] = value
    return opts


def _model_params(opts, clusters) -> ModelParams:
    k = opts["latent_dim"] or clusters
    if k is None:
        raise ValueError("--latent-dim is required when the dataset has no labels")
    return ModelParams(
        latent_dim=int(k),
        lambda1=float(opts["lambda1"]),
        lambda2=float(opts["lambda2"]),
        neighbors=_neighbors(opts["neighbors"]),
        max_iter=int(opts["max_iter"]),
        tol=float(opts["tol"]),
        seed=int(opts["seed"]),
    )


def _require(opts, *keys):
    for key in keys:
        if opts[key] is None:
            raise ValueError(f"--{key.replace('_', '-')} is required")


def _load(opts):
    data = load_views(opts["input"])
    return minmax_scale(data) if opts["minmax"] else data


def cmd_split(opts) -> dict:
    _require(opts, "input", "output", "paired_ratio")
    ratio = _floats(opts["paired_ratio"])
    if len(ratio) != 1:
        raise ValueError("split takes a single --paired-ratio")
    spec = SplitSpec(ratio[0], int(opts["seed"]))
    split = make_incomplete_split(_load(opts), spec)
    meta = {"seed": spec.seed, "paired_ratio": spec.paired_ratio, "rounding": spec.rounding}
    write_views(split, opts["output"], meta=meta)
    return {"output": str(opts["output"]), "n_paired": split.n_paired,
            "unpaired_counts": list(split.unpaired_counts), "notes": list(split.notes)}


def cmd_fit(opts) -> dict:
    _require(opts, "input", "output")
    data = _load(opts)
    params = _model_params(opts, data.n_clusters)
    graphs = build_graphs(data, params)
    state = fit(data, params, graphs=graphs)
    out = save_state(state, params, opts["output"])
    rep = data.to_original_order(assemble_representation(state, data))
    np.savetxt(Path(out) / "representation.csv", rep, delimiter=",", fmt="%.17g")
    if opts["dump_graph"]:
        for k, g in enumerate(graphs, start=1):
            write_edge_list(g, Path(out) / f"edges_{k}.csv")
    return {"output": str(out), "iterations": state.iterations, "converged": state.converged,
            "objective": state.trace[-1].total}


def cmd_cluster(opts) -> dict:
    _require(opts, "input", "clusters")
    src = Path(opts["input"])
    if src.is_dir():
        src = src / "representation.csv"
    points = np.loadtxt(src, delimiter=",", ndmin=2)
    km = KMeansParams(clusters=int(opts["clusters"]), restarts=int(opts["restarts"]), seed=int(opts["seed"]))
    labels = kmeans(points, km)
    out = Path(opts["output"]) if opts["output"] else src.with_name("clusters.csv")
    np.savetxt(out, labels, fmt="%d")
    return {"output": str(out), "clusters": km.clusters, "n": int(labels.size)}


def cmd_evaluate(opts) -> dict:
    _require(opts, "input", "labels")
    pred = np.loadtxt(opts["input"], ndmin=1).astype(np.int64)
    truth = np.loadtxt(opts["labels"], ndmin=1).astype(np.int64)
    scores = evaluate(pred, truth)
    if opts["output"]:
        Path(opts["output"]).write_text(json.dumps(scores, indent=2))
    return scores


def _experiment_config(opts) -> ExperimentConfig:
    _require(opts, "input", "output")
    data = _load(opts)
    ratios = _floats(opts["paired_ratio"]) if opts["paired_ratio"] is not None else DEFAULT_RATIOS
    clusters = data.n_clusters
    return ExperimentConfig(
        dataset=data,
        method=opts["method"],
        paired_ratios=tuple(ratios),
        trials=int(opts["trials"]),
        params=_model_params(opts, clusters),
        kmeans=KMeansParams(clusters=opts["clusters"] or clusters or 1, restarts=int(opts["restarts"])),
        seed=int(opts["seed"]),
        output=opts["output"],
    )


def cmd_experiment(opts) -> dict:
    report = run_experiment(_experiment_config(opts))
    return {"output": str(opts["output"]), "means": report.means}


def cmd_grid(opts) -> dict:
    config = _experiment_config(opts)
    g1 = _floats(opts["lambda1_grid"]) if opts["lambda1_grid"] is not None else DEFAULT_LAMBDA1_GRID
    g2 = _floats(opts["lambda2_grid"]) if opts["lambda2_grid"] is not None else DEFAULT_LAMBDA2_GRID
    result = grid_search(config, g1, g2)
    return {"output": str(opts["output"]), "best": {"lambda1": result.best.lambda1, "lambda2": result.best.lambda2}}


def cmd_synth(opts) -> dict:
    _require(opts, "output")
    dims = tuple(int(x) for x in str(opts["dims"]).split(","))
    clusters = int(opts["clusters"] or 3)
    data = make_blobs_views(int(opts["samples"]), clusters, dims, float(opts["separation"]), seed=int(opts["seed"]))
    write_views(data, opts["output"], meta={"generator": "blobs", "seed": int(opts["seed"])})
    return {"output": str(opts["output"]), "n": data.n_samples, "dims": list(dims)}


COMMANDS = {
    "split": cmd_split,
    "fit": cmd_fit,
    "cluster": cmd_cluster,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
    "grid": cmd_grid,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve_options(args)
        result = COMMANDS[args.command](opts)
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(result, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
