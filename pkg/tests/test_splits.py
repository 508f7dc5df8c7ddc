import numpy as np
import pytest

from mgm.errors import PreconditionError
from mgm.graph import make_splits
from mgm.graph.data import UNLABELED, Graph


def labeled_graph(counts, seed=0):
    """Graph with the given number of labeled nodes per class, no edges."""
    n = sum(counts) + 50  # plus some unlabeled
    labels = np.full(n, UNLABELED, dtype=np.int64)
    pos = 0
    for c, k in enumerate(counts):
        labels[pos:pos + k] = c
        pos += k
    rng = np.random.default_rng(seed)
    labels = rng.permutation(labels)
    return Graph(
        [f"n{i}" for i in range(n)],
        np.zeros((n, 1)),
        np.zeros((0, 2), dtype=np.int64),
        np.zeros(0),
        labels,
        [f"c{k}" for k in range(len(counts))],
    )


def test_sizes_on_859_labeled():
    g = labeled_graph([162, 249, 448])  # 859 labeled in total
    m = make_splits(g, seed=1)
    total = 859
    assert m.train.sum() + m.val.sum() + m.test.sum() == total
    assert abs(m.train.sum() - 601) <= 3
    assert abs(m.val.sum() - 86) <= 3
    assert abs(m.test.sum() - 172) <= 3


def test_determinism_same_seed():
    g = labeled_graph([30, 40, 50])
    a = make_splits(g, label_fraction=1.0, seed=7)
    b = make_splits(g, label_fraction=1.0, seed=7)
    assert (a.train == b.train).all()
    assert (a.val == b.val).all()
    assert (a.test == b.test).all()
    assert (a.active_train == b.active_train).all()
    c = make_splits(g, seed=8)
    assert not (a.train == c.train).all()


def test_label_fraction_subsampling_size():
    g = labeled_graph([40, 60, 80])
    m = make_splits(g, label_fraction=0.6, seed=3)
    full = make_splits(g, label_fraction=1.0, seed=3)
    assert m.active_train.sum() == round(0.6 * full.train.sum())
    assert (m.active_train & ~m.train).sum() == 0  # subset of train


def test_partition_property_over_random_graphs():
    rng = np.random.default_rng(5)
    for trial in range(15):
        counts = rng.integers(3, 40, size=rng.integers(2, 5)).tolist()
        g = labeled_graph(counts, seed=trial)
        ratios = (0.6, 0.2, 0.2) if trial % 2 else (0.7, 0.1, 0.2)
        m = make_splits(g, ratios=ratios, seed=trial)
        labeled = g.labeled_mask
        assert ((m.train | m.val | m.test) == labeled).all()
        assert not (m.train & m.val).any()
        assert not (m.train & m.test).any()
        assert not (m.val & m.test).any()


def test_tiny_class_kept_whole_in_training():
    g = labeled_graph([2, 30, 30])
    with pytest.warns(UserWarning, match="c0"):
        m = make_splits(g, seed=0)
    tiny = g.labels == 0
    assert (m.train & tiny).sum() == 2


def test_bad_ratios_and_fraction():
    g = labeled_graph([10, 10])
    with pytest.raises(PreconditionError):
        make_splits(g, ratios=(0.5, 0.2, 0.2))
    with pytest.raises(PreconditionError):
        make_splits(g, label_fraction=0.0)
