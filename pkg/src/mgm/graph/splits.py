"""Stratified train/validation/test splitting of the labeled nodes."""

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError
from .data import Graph


@dataclass
class SplitMasks:
    train: np.ndarray        # full 70%-style training partition
    val: np.ndarray
    test: np.ndarray
    label_fraction: float
    active_train: np.ndarray  # train further subsampled to label_fraction

    @property
    def train_val(self) -> np.ndarray:
        return self.train | self.val


def _apportion(counts, target):
    """Largest-remainder apportionment of ``target`` across class counts."""
    exact = counts * (target / counts.sum()) if counts.sum() else counts * 0.0
    base = np.floor(exact).astype(int)
    remainder = exact - base
    short = target - base.sum()
    order = np.lexsort((np.arange(len(counts)), -remainder))
    for c in order[:short]:
        base[c] += 1
    return base


def make_splits(g: Graph, ratios=(0.7, 0.1, 0.2), label_fraction=1.0, seed=0) -> SplitMasks:
    """Stratified-by-class split over the labeled nodes.

    The three masks partition the labeled set; ``active_train`` is the
    training mask after subsampling to ``label_fraction`` (stratified, total
    size ``round(label_fraction * |train|)``). Classes with fewer than 3
    labeled nodes go entirely to training with a warning.
    """
    if abs(sum(ratios)) == 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise PreconditionError("split ratios must sum to 1")
    if not (0.0 < label_fraction <= 1.0):
        raise PreconditionError("label_fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    n = g.n_nodes
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)

    for c in range(g.n_classes):
        idx = np.nonzero(g.labels == c)[0]
        if idx.size == 0:
            continue
        if idx.size < 3:
            warnings.warn(
                f"class {g.label_names[c]!r} has only {idx.size} labeled node(s); "
                "keeping it whole in training"
            )
            train[idx] = True
            continue
        idx = rng.permutation(idx)
        n_tr = int(np.floor(ratios[0] * idx.size))
        n_va = int(np.floor(ratios[1] * idx.size))
        n_tr = max(n_tr, 1)
        if ratios[1] > 0:
            n_va = max(n_va, 1)
        train[idx[:n_tr]] = True
        val[idx[n_tr:n_tr + n_va]] = True
        test[idx[n_tr + n_va:]] = True

    active = train.copy()
    if label_fraction < 1.0:
        train_idx = np.nonzero(train)[0]
        counts = np.array(
            [np.sum(g.labels[train_idx] == c) for c in range(g.n_classes)]
        )
        target = int(round(label_fraction * train_idx.size))
        quotas = _apportion(counts, target)
        active = np.zeros(n, dtype=bool)
        for c in range(g.n_classes):
            idx = train_idx[g.labels[train_idx] == c]
            if idx.size == 0:
                continue
            keep = rng.permutation(idx)[: quotas[c]]
            active[keep] = True

    return SplitMasks(train, val, test, label_fraction, active)
