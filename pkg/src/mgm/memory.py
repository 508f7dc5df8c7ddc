"""Global memory of labeled-node embeddings and candidate-mass selection.

The full bank stores one detached embedding row per training-labeled node.
After training, the expected candidate weights rank the rows and the top-M
prefix covering the configured probability mass becomes the sampled bank
used at prediction time.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from .diff import Tensor
from .errors import ConfigError, PreconditionError


@dataclass
class MemoryBank:
    node_indices: np.ndarray    # graph indices of candidates, int64
    embeddings: np.ndarray      # M x d, detached float64
    labels_onehot: np.ndarray   # M x C
    mode: str = "full"          # full | sampled
    mass_threshold: float = 0.90

    def __post_init__(self):
        if len(np.unique(self.node_indices)) != len(self.node_indices):
            raise PreconditionError("memory candidate ids must be unique")
        if self.embeddings.shape[0] != len(self.node_indices):
            raise PreconditionError("embedding rows misaligned with ids")
        if self.labels_onehot.shape[0] != len(self.node_indices):
            raise PreconditionError("label rows misaligned with ids")

    @property
    def size(self) -> int:
        return len(self.node_indices)

    def position_of(self, node_index) -> int | None:
        hits = np.nonzero(self.node_indices == node_index)[0]
        return int(hits[0]) if hits.size else None

    def to_json_obj(self) -> dict:
        return {
            "node_indices": self.node_indices.tolist(),
            "embeddings": self.embeddings.tolist(),
            "labels_onehot": self.labels_onehot.tolist(),
            "mode": self.mode,
            "mass_threshold": self.mass_threshold,
        }

    @classmethod
    def from_json_obj(cls, obj) -> "MemoryBank":
        return cls(
            node_indices=np.asarray(obj["node_indices"], dtype=np.int64),
            embeddings=np.asarray(obj["embeddings"], dtype=np.float64),
            labels_onehot=np.asarray(obj["labels_onehot"], dtype=np.float64),
            mode=obj["mode"],
            mass_threshold=obj["mass_threshold"],
        )

    def export(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_obj() | {"size": self.size}, fh)


def build_memory(encode_fn, graph, train_mask) -> MemoryBank:
    """Embed all training-labeled nodes once and store them detached."""
    train_mask = np.asarray(train_mask, dtype=bool)
    if not train_mask.any():
        raise PreconditionError("build_memory: empty training mask")
    idx = np.nonzero(train_mask)[0]
    z = encode_fn()
    data = z.data if isinstance(z, Tensor) else np.asarray(z)
    onehot = np.zeros((idx.size, graph.n_classes))
    onehot[np.arange(idx.size), graph.labels[idx]] = 1.0
    return MemoryBank(idx.astype(np.int64), data[idx].copy(), onehot)


def refresh(memory: MemoryBank, encode_fn) -> MemoryBank:
    """Recompute embeddings for the same candidates; ids and labels are kept."""
    z = encode_fn()
    data = z.data if isinstance(z, Tensor) else np.asarray(z)
    return replace(memory, embeddings=data[memory.node_indices].copy())


def expected_omega(lam) -> np.ndarray:
    """Mean of the Dirichlet: lam normalized to the simplex."""
    lam = np.asarray(lam, dtype=np.float64)
    if (lam <= 0).any():
        raise PreconditionError("lambda must be strictly positive")
    return lam / lam.sum()


def select_candidates(memory: MemoryBank, omega, threshold=0.90) -> MemoryBank:
    """Keep the shortest descending-omega prefix with cumulative mass >= threshold.

    Ties in omega break by ascending node id so selection is deterministic.
    The mass comparison carries a 1e-12 slop to absorb cumsum rounding.
    """
    if not (0.0 < threshold <= 1.0):
        raise ConfigError("mass threshold must lie in (0, 1]")
    omega = np.asarray(omega, dtype=np.float64)
    if omega.shape != (memory.size,):
        raise PreconditionError("omega misaligned with memory")
    order = np.lexsort((memory.node_indices, -omega))
    cumulative = np.cumsum(omega[order])
    m = int(np.searchsorted(cumulative, threshold - 1e-12) + 1)
    m = min(m, memory.size)
    keep = np.sort(order[:m])
    return MemoryBank(
        node_indices=memory.node_indices[keep],
        embeddings=memory.embeddings[keep].copy(),
        labels_onehot=memory.labels_onehot[keep].copy(),
        mode="sampled",
        mass_threshold=threshold,
    )


def select_fraction(memory: MemoryBank, omega, fraction) -> MemoryBank:
    """Mass-based selection with the threshold set to ``fraction``."""
    if not (0.0 < fraction <= 1.0):
        raise ConfigError("fraction must lie in (0, 1]")
    if fraction == 1.0:
        return replace(memory)
    return select_candidates(memory, omega, threshold=fraction)
