from .data import (
    UNLABELED,
    Graph,
    load_graph,
    mean_adjacency,
    normalize_adjacency,
    save_graph,
)
from .metrics import MetricsReport, compute_metrics
from .splits import SplitMasks, make_splits
from .synth import count_components, synth_graph

__all__ = [
    "UNLABELED",
    "Graph",
    "load_graph",
    "mean_adjacency",
    "normalize_adjacency",
    "save_graph",
    "MetricsReport",
    "compute_metrics",
    "SplitMasks",
    "make_splits",
    "count_components",
    "synth_graph",
]
