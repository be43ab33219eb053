"""Incomplete multi-view clustering by graph regularized matrix factorization."""

from imcgrmf.baselines import FilledDataset, bsv_cluster, concat_cluster, mean_fill
from imcgrmf.clustering import KMeansParams, KMeansResult, kmeans, kmeans_fit
from imcgrmf.dataset import (
    DatasetError,
    MultiViewDataset,
    SplitSpec,
    index_matrix,
    load_views,
    make_blobs_views,
    make_incomplete_split,
    write_views,
)
from imcgrmf.graph import NeighborGraph, default_neighbor_count, knn_graph
from imcgrmf.metrics import accuracy, contingency, nmi, purity
from imcgrmf.solver import (
    ModelParams,
    ModelState,
    ObjectiveTerms,
    SolverError,
    assemble_representation,
    fit,
    init_state,
    objective,
    project_sample,
    recover_view,
    soft_threshold,
    update_basis,
    update_consensus,
    update_representation,
)

__version__ = "0.1.0"

__all__ = [
    "DatasetError",
    "FilledDataset",
    "KMeansParams",
    "KMeansResult",
    "ModelParams",
    "ModelState",
    "MultiViewDataset",
    "NeighborGraph",
    "ObjectiveTerms",
    "SolverError",
    "SplitSpec",
    "accuracy",
    "assemble_representation",
    "bsv_cluster",
    "concat_cluster",
    "contingency",
    "default_neighbor_count",
    "fit",
    "index_matrix",
    "init_state",
    "kmeans",
    "kmeans_fit",
    "knn_graph",
    "load_views",
    "make_blobs_views",
    "make_incomplete_split",
    "mean_fill",
    "nmi",
    "objective",
    "project_sample",
    "purity",
    "recover_view",
    "soft_threshold",
    "update_basis",
    "update_consensus",
    "update_representation",
    "write_views",
]
