import numpy as np

from imcgrmf.baselines import bsv_cluster, concat_cluster, mean_fill
from imcgrmf.clustering import KMeansParams, kmeans
from imcgrmf.dataset import MultiViewDataset, make_blobs_views
from imcgrmf.metrics import accuracy


def test_mean_fill_example():
    d = MultiViewDataset(
        views=(np.array([[1.0, 3.0], [3.0, 5.0]]), np.array([[0.0], [2.0]])),
        n_paired=1,
    )
    f = mean_fill(d)
    # assembled order: paired, view-0-only, view-1-only
    np.testing.assert_array_equal(f.views[0], [[1, 3], [3, 5], [2, 4]])
    np.testing.assert_array_equal(f.views[1], [[0], [1], [2]])
    np.testing.assert_array_equal(f.imputed, [[False, False], [False, True], [True, False]])


def test_mean_fill_complete_is_identity(blobs):
    f = mean_fill(blobs)
    for a, b in zip(f.views, blobs.views):
        np.testing.assert_array_equal(a, b)
    assert not f.imputed.any()


def test_mean_fill_constant_rows():
    d = MultiViewDataset(views=(np.ones((3, 2)), np.ones((4, 2)) * 7), n_paired=2)
    f = mean_fill(d)
    assert np.all(f.views[0] == 1.0) and np.all(f.views[1] == 7.0)


def test_mean_fill_idempotent(blob_split):
    once = mean_fill(blob_split)
    twice = mean_fill(once)
    for a, b in zip(once.views, twice.views):
        np.testing.assert_array_equal(a, b)


def test_bsv_picks_informative_view(rng):
    d = make_blobs_views(90, 3, (6, 6), separation=8.0, seed=2)
    noisy = MultiViewDataset(views=(rng.normal(size=(90, 6)), d.views[1]), n_paired=90, labels=d.labels)
    res = bsv_cluster(noisy, 3, seed=0)
    assert res.view == 1
    assert accuracy(res.labels, d.labels) == 1.0
    assert res.view_metrics[1]["acc"] > res.view_metrics[0]["acc"]


def test_bsv_tie_goes_to_first_view(blobs):
    same = MultiViewDataset(views=(blobs.views[0], blobs.views[0]), n_paired=150, labels=blobs.labels)
    assert bsv_cluster(same, 3, seed=0).view == 0


def test_bsv_single_cluster():
    d = MultiViewDataset(views=(np.ones((5, 2)), np.ones((5, 2))), n_paired=5, labels=np.zeros(5))
    res = bsv_cluster(d, 1)
    assert accuracy(res.labels, d.labels) == 1.0


def test_bsv_without_labels_is_flagged(blobs):
    d = MultiViewDataset(views=blobs.views, n_paired=150)
    res = bsv_cluster(d, 3)
    assert res.flagged and res.view == 0


def test_concat_width_and_order(rng):
    d = MultiViewDataset(views=(rng.normal(size=(4, 2)), rng.normal(size=(5, 3))), n_paired=3)
    f = mean_fill(d)
    wide = np.hstack(f.views)
    assert wide.shape == (d.n_samples, 5)
    np.testing.assert_array_equal(wide[:3, :2], d.views[0][:3])
    labels = concat_cluster(d, 2, seed=1)
    np.testing.assert_array_equal(labels, kmeans(wide, KMeansParams(2, seed=1)))


def test_concat_duplicated_blobs():
    d = make_blobs_views(120, 3, (5,), separation=10.0, seed=4)
    dup = MultiViewDataset(views=(d.views[0], d.views[0]), n_paired=120, labels=d.labels)
    assert accuracy(concat_cluster(dup, 3), d.labels) == 1.0


def test_complete_data_reduces_to_plain_kmeans(blobs):
    km = KMeansParams(3, seed=5)
    np.testing.assert_array_equal(concat_cluster(blobs, 3, seed=5), kmeans(np.hstack(blobs.views), km))
    np.testing.assert_array_equal(bsv_cluster(blobs, 3, seed=5).labels, kmeans(blobs.views[0], km))
