"""Clustering scores: accuracy under optimal matching, NMI and purity."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["accuracy", "contingency", "evaluate", "nmi", "purity"]


def _check(pred, truth):
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.size != truth.size:
        raise ValueError(f"length mismatch: {pred.size} predictions, {truth.size} labels")
    if pred.size == 0:
        raise ValueError("empty labelling")
    return pred, truth


def contingency(pred, truth) -> np.ndarray:
    """Counts table, rows = predicted clusters, columns = true classes."""
    pred, truth = _check(pred, truth)
    _, p = np.unique(pred, return_inverse=True)
    _, t = np.unique(truth, return_inverse=True)
    table = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(table, (p, t), 1)
    return table


def accuracy(pred, truth) -> float:
    """Fraction of samples matched under the best one-to-one cluster/class map.

    Solved with the Hungarian method; rectangular tables behave as if padded
    with zero rows/columns.
    """
    table = contingency(pred, truth)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / table.sum())


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(pred, truth) -> float:
    """Mutual information over the geometric mean of the two entropies (nats).

    Two single-cluster partitions score 1; if only one of them is a single
    cluster the score is 0.
    """
    table = contingency(pred, truth)
    n = table.sum()
    h_pred = _entropy(table.sum(axis=1), n)
    h_true = _entropy(table.sum(axis=0), n)
    if h_pred == 0.0 and h_true == 0.0:
        return 1.0
    if h_pred == 0.0 or h_true == 0.0:
        return 0.0
    joint = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / (n * n)
    nz = joint > 0
    mi = float((joint[nz] * np.log(joint[nz] / outer[nz])).sum())
    return float(min(max(mi / np.sqrt(h_pred * h_true), 0.0), 1.0))


def purity(pred, truth) -> float:
    table = contingency(pred, truth)
    return float(table.max(axis=1).sum() / table.sum())


def evaluate(pred, truth) -> dict:
    return {"acc": accuracy(pred, truth), "nmi": nmi(pred, truth), "purity": purity(pred, truth)}
