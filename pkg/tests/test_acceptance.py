"""Exit criteria. Each test prints one PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``; the verdict lines
are printed even when output capture is on.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from imcgrmf.dataset import MultiViewDataset, SplitSpec, load_views, make_blobs_views, make_incomplete_split
from imcgrmf.graph import knn_graph
from imcgrmf.harness import (
    DEFAULT_LAMBDA1_GRID,
    DEFAULT_LAMBDA2_GRID,
    DEFAULT_RATIOS,
    ExperimentConfig,
    grid_search,
    run_experiment,
)
from imcgrmf.metrics import accuracy, nmi, purity
from imcgrmf.solver import (
    ModelParams,
    ModelState,
    build_graphs,
    data_constant,
    fit,
    objective,
    procrustes_basis,
    update_consensus,
    update_representation,
    working_objective,
)

from conftest import random_incomplete
from oracles import coordinate_minimise, nmi_by_counting, random_row_orthonormal, representation_subproblem
from test_metrics import brute_accuracy


@pytest.fixture
def verdict(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, f"{name}: {detail}"

    return emit


def _ortho_error(u):
    return float(np.abs(u @ u.T - np.eye(u.shape[0])).max())


@pytest.fixture(scope="module")
def random_runs():
    """50 random small fits: n <= 40, two views, K <= 4, lambdas from the grid."""
    rng = np.random.default_rng(2024)
    runs = []
    start = time.perf_counter()
    for _ in range(50):
        data = random_incomplete(rng, n=int(rng.integers(8, 41)))
        k = int(rng.integers(1, min(4, *data.feature_dims) + 1))
        params = ModelParams(
            latent_dim=k,
            lambda1=float(rng.choice(DEFAULT_LAMBDA1_GRID)),
            lambda2=float(rng.choice(DEFAULT_LAMBDA2_GRID)),
            neighbors=int(rng.integers(1, 6)),
            seed=int(rng.integers(1 << 30)),
        )
        graphs = build_graphs(data, params)
        orth, steps = [], []

        def watch(it, step, view, state, orth=orth, steps=steps):
            if step == "basis":
                orth.append(_ortho_error(state.bases[view]))
            steps.append(objective(data, graphs, state, params).total)

        state = fit(data, params, graphs=graphs, callback=watch)
        runs.append((state, [state.trace[0].total] + steps, orth))
    return runs, time.perf_counter() - start


def test_monotone_convergence(random_runs, verdict):
    runs, elapsed = random_runs

    def largest_rise(values):
        v = np.asarray(values)
        return float(((v[1:] - v[:-1]) / np.abs(v[:-1])).max(initial=-np.inf))

    sweep = max(largest_rise(state.objective_trace) for state, _, _ in runs)
    step = max(largest_rise(steps) for _, steps, _ in runs)
    ok = sweep <= 1e-9 and step <= 1e-9 and elapsed < 30.0
    verdict("monotone convergence", ok,
            f"50 runs, largest relative rise per sweep {sweep:.1e}, per sub-update {step:.1e} (<= 1e-9), "
            f"{elapsed:.1f}s (< 30s)")


def test_orthogonality(random_runs, verdict):
    runs, _ = random_runs
    errors = [e for _, _, orth in runs for e in orth]
    worst = max(errors)
    verdict("orthogonality", worst <= 1e-8, f"{len(errors)} basis updates, max |UU^T - I| = {worst:.2e} (<= 1e-8)")


def test_procrustes_optimality(verdict):
    rng = np.random.default_rng(7)
    gap, beaten = 0.0, 0
    for _ in range(100):
        m = int(rng.integers(2, 12))
        k = int(rng.integers(1, m + 1))
        s = rng.normal(size=(m, k))
        u = procrustes_basis(s)
        achieved = float(np.trace(s @ u))
        nuclear = float(np.linalg.svd(s, compute_uv=False).sum())
        gap = max(gap, abs(achieved - nuclear) / nuclear)
        draws = max(float(np.trace(s @ random_row_orthonormal(rng, k, m))) for _ in range(1000))
        beaten += draws > achieved + 1e-12 * nuclear
    ok = gap <= 1e-8 and beaten == 0
    verdict("procrustes optimality", ok, f"100 matrices, max |tr(SU) - ||S||_*| / ||S||_* = {gap:.1e}, beaten by random U: {beaten}")


def test_proximal_update_exactness(verdict):
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(4, 8))
        m = int(rng.integers(2, 5))
        k = int(rng.integers(1, m + 1))
        n_c = int(rng.integers(1, n + 1))
        x = rng.normal(size=(n, m))
        g = knn_graph(x, int(rng.integers(1, n)))
        u = random_row_orthonormal(rng, k, m)
        pc = rng.normal(size=(n_c, k))
        lam1 = float(rng.choice(DEFAULT_LAMBDA1_GRID))
        lam2 = float(rng.uniform(0.0, 2.0))
        f = representation_subproblem(x, g.dense(), g.degrees, n_c, pc, u, lam1, lam2)
        p_num = coordinate_minimise(f, (n, k), bound=100.0)
        p = update_representation(x, g, pc, u, lam1, lam2)
        worst = max(worst, float(np.abs(p - p_num).max()))
    verdict("proximal-update exactness", worst <= 1e-6, f"20 instances, max deviation from numerical minimiser {worst:.1e} (<= 1e-6)")


def test_consensus_stationarity(verdict):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        v = int(rng.integers(2, 5))
        shape = (int(rng.integers(1, 8)), int(rng.integers(1, 5)))
        blocks = [rng.random(shape) for _ in range(v)]
        pc = update_consensus(blocks)

        def f(c):
            return sum(float(np.sum((b - c) ** 2)) for b in blocks)

        h = 1e-2
        for idx in np.ndindex(pc.shape):
            e = np.zeros_like(pc)
            e[idx] = h
            worst = max(worst, abs(f(pc + e) - f(pc - e)) / (2 * h))
    verdict("consensus stationarity", worst <= 1e-10, f"finite-difference gradient max-norm {worst:.1e} (<= 1e-10)")


def test_degree_expansion_identity(verdict):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(30):
        data = random_incomplete(rng)
        k = int(rng.integers(1, 4))
        params = ModelParams(latent_dim=k, lambda1=float(rng.choice(DEFAULT_LAMBDA1_GRID)),
                             lambda2=float(rng.choice(DEFAULT_LAMBDA2_GRID)), neighbors=int(rng.integers(1, 5)))
        graphs = build_graphs(data, params)
        state = ModelState(
            bases=[random_row_orthonormal(rng, k, m) for m in data.feature_dims],
            representations=[rng.normal(size=(x.shape[0], k)) for x in data.views],
            consensus=rng.normal(size=(data.n_paired, k)),
        )
        full = objective(data, graphs, state, params).total
        reduced = working_objective(data, graphs, state, params) + data_constant(data, graphs)
        worst = max(worst, abs(full - reduced) / abs(full))
    verdict("degree-expansion identity", worst <= 1e-8, f"30 random states, max relative gap {worst:.1e} (<= 1e-8)")


def test_metric_oracles(verdict):
    rng = np.random.default_rng(17)
    acc_bad = nmi_gap = relabel_gap = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 30))
        pred = rng.integers(0, int(rng.integers(1, 7)), size=n)
        truth = rng.integers(0, int(rng.integers(1, 7)), size=n)
        acc_bad = max(acc_bad, abs(accuracy(pred, truth) - brute_accuracy(pred, truth)))
        nmi_gap = max(nmi_gap, abs(nmi(pred, truth) - nmi_by_counting(list(pred), list(truth))))
        perm = rng.permutation(6)
        for f in (accuracy, nmi, purity):
            relabel_gap = max(relabel_gap, abs(f(perm[pred], truth) - f(pred, truth)))
    ok = acc_bad == 0.0 and nmi_gap <= 1e-12 and relabel_gap <= 1e-12
    verdict("metric oracles", ok,
            f"200 cases: ACC vs brute force {acc_bad:.0e}, NMI vs counting {nmi_gap:.1e}, relabelling {relabel_gap:.1e}")


# -- synthetic benchmark -----------------------------------------------------


@pytest.fixture(scope="module")
def blob_benchmark():
    return make_blobs_views(150, 3, (20, 15), separation=6.0, seed=0)


def test_early_decrease(blob_benchmark, verdict):
    split = make_incomplete_split(blob_benchmark, SplitSpec(0.5, seed=0))
    state = fit(split, ModelParams(latent_dim=3, seed=0))
    tr = state.objective_trace
    share = (tr[0] - tr[min(20, len(tr) - 1)]) / (tr[0] - tr[-1])
    verdict("early decrease", share >= 0.90,
            f"{share:.4%} of the total decrease within 20 of {state.iterations} iterations (>= 90%)")


def test_end_to_end_superiority(blob_benchmark, verdict):
    means = {}
    for method in ("imcgrmf", "bsv", "concat"):
        report = run_experiment(ExperimentConfig(blob_benchmark, method=method, paired_ratios=(0.5,), trials=5, seed=0))
        means[method] = report.means[0]["acc"]
    imc = means["imcgrmf"]
    checks = {
        "ACC >= 0.90": imc >= 0.90,
        "ACC >= BSV": imc >= means["bsv"],
        "ACC >= Concat": imc >= means["concat"],
    }
    failed = [k for k, v in checks.items() if not v]
    detail = (f"mean ACC imcgrmf={imc:.4f} bsv={means['bsv']:.4f} concat={means['concat']:.4f}"
              + (f"; failed: {', '.join(failed)}" if failed else ""))
    verdict("end-to-end superiority", not failed, detail)


# -- handwritten digits at full scale (needs the handwritten digit data locally) -------------------


def _handwritten():
    root = os.environ.get("IMCGRMF_HANDWRITTEN")
    if not root:
        return None
    root = Path(root)
    if (root / "mfeat-pix").exists():
        pix = np.loadtxt(root / "mfeat-pix")
        fou = np.loadtxt(root / "mfeat-fou")
        labels = np.repeat(np.arange(10), 200)
        return MultiViewDataset(views=(pix, fou), n_paired=2000, labels=labels)
    return load_views(root)


@pytest.mark.slow
def test_handwritten_digits_full_scale(verdict):
    data = _handwritten()
    if data is None:
        pytest.skip("set IMCGRMF_HANDWRITTEN to the UCI multiple-features directory (mfeat-pix, mfeat-fou)")
    accs = []
    for ratio in DEFAULT_RATIOS:
        cfg = ExperimentConfig(data, paired_ratios=(ratio,), trials=5, params=ModelParams(latent_dim=10))
        best = grid_search(cfg).best
        report = run_experiment(ExperimentConfig(data, paired_ratios=(ratio,), trials=5, params=best))
        accs.append(report.means[0]["acc"])
    monotone = all(b >= a for a, b in zip(accs, accs[1:]))
    near = abs(accs[-1] - 0.9077) <= 0.07
    verdict("handwritten digits full scale", monotone and near,
            "mean ACC by ratio " + ", ".join(f"{r}:{a:.4f}" for r, a in zip(DEFAULT_RATIOS, accs))
            + " (increasing; within 7 points of 0.9077 at 0.9)")


# -- performance envelope ----------------------------------------------------


def _timed_fit(n):
    data = make_blobs_views(n, 10, (240, 76), separation=6.0, seed=0)
    split = make_incomplete_split(data, SplitSpec(0.5, seed=0))
    params = ModelParams(latent_dim=10, max_iter=200, tol=1e-300)
    start = time.perf_counter()
    state = fit(split, params)
    return time.perf_counter() - start, state.iterations


@pytest.mark.slow
def test_performance_envelope(verdict):
    sizes = (500, 1000, 2000)
    times = {}
    for n in sizes:
        runs = [_timed_fit(n) for _ in range(2)]
        times[n] = min(t for t, _ in runs)
        assert all(it == 200 for _, it in runs)
    slope = float(np.polyfit(np.log(sizes), np.log([times[n] for n in sizes]), 1)[0])
    ok = times[2000] < 10.0 and slope < 2.0
    verdict("performance envelope", ok,
            f"200 iterations: " + ", ".join(f"n={n} {times[n]:.2f}s" for n in sizes)
            + f"; log-log slope {slope:.2f} (< 2), n=2000 under 10s")
