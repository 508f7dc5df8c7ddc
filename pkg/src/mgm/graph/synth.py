"""Synthetic media-graph generator: disconnected stochastic-block components
with class-conditioned Gaussian features and sparse stratified labels.

Each component is an independent block model over the classes; a ring over
the component's nodes (grouped by class) guarantees internal connectivity,
so the number of connected components equals ``n_components`` exactly. The
generator also records the full ground-truth class of every node in
``Graph.gold`` so benchmark runs can score predictions beyond the labeled
subset.
"""

import numpy as np

from ..errors import GenerationError
from .data import UNLABELED, Graph

AVG_DEGREE = 8.0


def synth_graph(
    n_nodes,
    n_components,
    n_classes,
    homophily,
    label_fraction,
    feature_noise,
    seed,
) -> Graph:
    if n_components < 1:
        raise GenerationError("n_components must be >= 1")
    if not (0.0 <= homophily <= 1.0):
        raise GenerationError("homophily must lie in [0, 1]")
    if not (0.0 < label_fraction <= 1.0):
        raise GenerationError("label_fraction must lie in (0, 1]")
    if n_nodes < n_components * n_classes:
        raise GenerationError(
            f"{n_nodes} nodes cannot fill {n_components} components x {n_classes} classes"
        )
    rng = np.random.default_rng(seed)

    comp_sizes = np.full(n_components, n_nodes // n_components)
    comp_sizes[: n_nodes % n_components] += 1

    gold = np.empty(n_nodes, dtype=np.int64)
    edge_set = []
    offset = 0
    for size in comp_sizes:
        classes = np.arange(size) % n_classes  # balanced within component
        gold[offset:offset + size] = classes

        # connectivity ring over class-grouped order
        for k in range(size):
            if size > 1:
                edge_set.append((offset + k, offset + (k + 1) % size))

        # block-model edges, intra/inter class rates tilted by homophily
        same_frac = 1.0 / n_classes
        rate = AVG_DEGREE / max(
            size * (homophily * same_frac + (1 - homophily) * (1 - same_frac)), 1.0
        )
        p_same = min(rate * homophily, 1.0)
        p_diff = min(rate * (1 - homophily), 1.0)
        upper = np.triu(rng.random((size, size)), 1)
        same = classes[:, None] == classes[None, :]
        prob = np.where(same, p_same, p_diff)
        hit = (upper > 0) & (upper < prob)
        for i, j in zip(*np.nonzero(hit)):
            edge_set.append((offset + i, offset + j))
        offset += size

    dedup = {}
    for i, j in edge_set:
        if i == j:
            continue
        key = (min(i, j), max(i, j))
        if key not in dedup:
            dedup[key] = round(float(rng.uniform(1.0, 100.0)), 2)
    keys = sorted(dedup)
    edges = np.asarray(keys, dtype=np.int64).reshape(-1, 2)
    weights = np.asarray([dedup[k] for k in keys], dtype=np.float64)

    # class-conditioned Gaussians with unit-separated means
    means = np.eye(n_classes) / np.sqrt(2.0)
    features = means[gold] + feature_noise * rng.standard_normal((n_nodes, n_classes))

    n_labeled = int(np.ceil(label_fraction * n_nodes))
    labels = np.full(n_nodes, UNLABELED, dtype=np.int64)
    counts = np.bincount(gold, minlength=n_classes)
    exact = counts * (n_labeled / n_nodes)
    quotas = np.floor(exact).astype(int)
    rest = n_labeled - quotas.sum()
    order = np.lexsort((np.arange(n_classes), -(exact - quotas)))
    for c in order[:rest]:
        quotas[c] += 1
    if (quotas == 0).any() and (counts > 0).any():
        zero = [c for c in range(n_classes) if quotas[c] == 0 and counts[c] > 0]
        if zero and n_labeled < n_classes:
            raise GenerationError(
                f"label_fraction {label_fraction} leaves classes {zero} unlabeled"
            )
    for c in range(n_classes):
        idx = np.nonzero(gold == c)[0]
        pick = rng.permutation(idx)[: quotas[c]]
        labels[pick] = c

    node_ids = [f"synth{n:05d}" for n in range(n_nodes)]
    label_names = [f"class{c}" for c in range(n_classes)]
    return Graph(node_ids, features, edges, weights, labels, label_names, gold=gold)


def count_components(g: Graph) -> int:
    """Union-find over the edge list."""
    parent = list(range(g.n_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in g.edges:
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[ri] = rj
    return len({find(x) for x in range(g.n_nodes)})
