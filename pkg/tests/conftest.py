import numpy as np
import pytest

from imcgrmf import MultiViewDataset, SplitSpec, make_blobs_views, make_incomplete_split


def random_incomplete(rng, n=None, dims=None, ratio=None):
    """Small random two-view dataset with a random incomplete split."""
    n = n or int(rng.integers(8, 41))
    dims = dims or (int(rng.integers(4, 9)), int(rng.integers(4, 9)))
    views = tuple(rng.normal(size=(n, m)) for m in dims)
    labels = rng.integers(0, 3, size=n)
    complete = MultiViewDataset(views=views, n_paired=n, labels=labels)
    ratio = ratio if ratio is not None else float(rng.choice([0.1, 0.3, 0.5, 0.7, 0.9]))
    return make_incomplete_split(complete, SplitSpec(ratio, int(rng.integers(1 << 30))))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def blobs():
    return make_blobs_views(150, 3, (20, 15), separation=6.0, seed=0)


@pytest.fixture(scope="session")
def blob_split(blobs):
    return make_incomplete_split(blobs, SplitSpec(0.5, seed=0))
