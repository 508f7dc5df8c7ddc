"""Graph data model and ingestion for the media-graph TSV format.

Files are tab-separated UTF-8:

* nodes:  ``node_id<TAB>f1<TAB>...<TAB>fF`` (header row optional)
* edges:  ``src_id<TAB>dst_id<TAB>weight``  with weight an audience-overlap
  percent in [0, 100]
* labels: ``node_id<TAB>label_string``

Edges are treated as undirected; duplicates (in either direction) collapse
to the maximum weight. Features are z-scored per column at load time, so a
saved graph must be re-loaded with ``normalize=False`` to round-trip.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from ..diff.sparse import SparseMatrix
from ..errors import IngestionError, PreconditionError

UNLABELED = -1


@dataclass
class Graph:
    node_ids: list
    features: np.ndarray          # N x F, float64
    edges: np.ndarray             # E x 2 int64, canonical src < dst
    weights: np.ndarray           # E float64
    labels: np.ndarray            # N int64, UNLABELED where unknown
    label_names: list
    gold: np.ndarray | None = None  # full ground truth on synthetic graphs
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index = {nid: i for i, nid in enumerate(self.node_ids)}

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    @property
    def n_edges(self) -> int:
        return len(self.weights)

    @property
    def labeled_mask(self) -> np.ndarray:
        return self.labels != UNLABELED

    def index_of(self, node_id) -> int:
        return self._index[node_id]


def _parse_float(text, path, lineno):
    try:
        return float(text)
    except ValueError:
        raise IngestionError(f"{path}:{lineno}: not a number: {text!r}") from None


def load_graph(nodes_path, edges_path, labels_path, label_map, normalize=True) -> Graph:
    """Load a graph from the three TSV files.

    ``label_map`` is the ordered list of class names; any other label string
    in the labels file is an error. Duplicate edges keep the max weight, and
    directed input is symmetrized the same way.
    """
    node_ids = []
    feats = []
    n_feat = None
    with open(nodes_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if lineno == 1 and _looks_like_header(parts):
                continue
            nid, *vals = parts
            if n_feat is None:
                n_feat = len(vals)
                if n_feat < 1:
                    raise IngestionError(f"{nodes_path}:{lineno}: node row has no features")
            elif len(vals) != n_feat:
                raise IngestionError(
                    f"{nodes_path}:{lineno}: expected {n_feat} features, got {len(vals)}"
                )
            node_ids.append(nid)
            feats.append([_parse_float(v, nodes_path, lineno) for v in vals])
    if not node_ids:
        raise IngestionError(f"{nodes_path}: no nodes")
    index = {}
    for i, nid in enumerate(node_ids):
        if nid in index:
            raise IngestionError(f"{nodes_path}: duplicate node id {nid!r}")
        index[nid] = i
    features = np.asarray(feats, dtype=np.float64)
    if normalize:
        mu = features.mean(axis=0)
        sd = features.std(axis=0)
        sd[sd == 0.0] = 1.0
        features = (features - mu) / sd

    best = {}
    with open(edges_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if lineno == 1 and len(parts) == 3 and _looks_like_header(parts):
                continue
            if len(parts) != 3:
                raise IngestionError(f"{edges_path}:{lineno}: expected 3 columns")
            src, dst, w = parts
            for endpoint in (src, dst):
                if endpoint not in index:
                    raise IngestionError(
                        f"{edges_path}:{lineno}: dangling endpoint {endpoint!r}"
                    )
            weight = _parse_float(w, edges_path, lineno)
            if not np.isfinite(weight) or weight < 0:
                raise IngestionError(
                    f"{edges_path}:{lineno}: weight must be finite and non-negative"
                )
            i, j = index[src], index[dst]
            if i == j:
                continue  # self-loops are added during normalization
            key = (min(i, j), max(i, j))
            if key not in best or weight > best[key]:
                best[key] = weight

    if best:
        keys = sorted(best)
        edges = np.asarray(keys, dtype=np.int64)
        weights = np.asarray([best[k] for k in keys], dtype=np.float64)
    else:
        edges = np.zeros((0, 2), dtype=np.int64)
        weights = np.zeros(0, dtype=np.float64)

    labels = np.full(len(node_ids), UNLABELED, dtype=np.int64)
    name_to_class = {name: c for c, name in enumerate(label_map)}
    with open(labels_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise IngestionError(f"{labels_path}:{lineno}: expected 2 columns")
            nid, name = parts
            if nid not in index:
                raise IngestionError(f"{labels_path}:{lineno}: unknown node id {nid!r}")
            if name not in name_to_class:
                raise IngestionError(
                    f"{labels_path}:{lineno}: unknown label {name!r} for node {nid!r}"
                )
            labels[index[nid]] = name_to_class[name]

    return Graph(node_ids, features, edges, weights, labels, list(label_map))


def _looks_like_header(parts):
    if not parts:
        return False
    try:
        float(parts[-1])
        return False
    except ValueError:
        return True


def save_graph(g: Graph, out_dir):
    """Write nodes/edges/labels TSV files; features are saved as stored."""
    os.makedirs(out_dir, exist_ok=True)
    nodes_path = os.path.join(out_dir, "nodes.tsv")
    edges_path = os.path.join(out_dir, "edges.tsv")
    labels_path = os.path.join(out_dir, "labels.tsv")
    with open(nodes_path, "w", encoding="utf-8") as fh:
        for i, nid in enumerate(g.node_ids):
            row = "\t".join(repr(float(v)) for v in g.features[i])
            fh.write(f"{nid}\t{row}\n")
    with open(edges_path, "w", encoding="utf-8") as fh:
        for (i, j), w in zip(g.edges, g.weights):
            fh.write(f"{g.node_ids[i]}\t{g.node_ids[j]}\t{float(w)!r}\n")
    with open(labels_path, "w", encoding="utf-8") as fh:
        for i, lab in enumerate(g.labels):
            if lab != UNLABELED:
                fh.write(f"{g.node_ids[i]}\t{g.label_names[lab]}\n")
    return nodes_path, edges_path, labels_path


def normalize_adjacency(g: Graph, add_self_loops=True, weighted=True) -> SparseMatrix:
    """Symmetric degree-normalized adjacency D^-1/2 (A + I) D^-1/2.

    Isolated nodes always receive a unit self-loop so no row is zero.
    """
    if g.n_nodes == 0:
        raise PreconditionError("normalize_adjacency: empty graph")
    n = g.n_nodes
    if g.n_edges:
        src = g.edges[:, 0]
        dst = g.edges[:, 1]
        w = g.weights if weighted else np.ones_like(g.weights)
        rows = np.concatenate([src, dst])
        cols = np.concatenate([dst, src])
        vals = np.concatenate([w, w])
    else:
        rows = np.zeros(0, dtype=np.int64)
        cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=np.float64)

    if add_self_loops:
        loop_nodes = np.arange(n)
    else:
        degree_pos = np.zeros(n, dtype=bool)
        degree_pos[rows] = True
        loop_nodes = np.nonzero(~degree_pos)[0]  # keep isolated rows invertible
    rows = np.concatenate([rows, loop_nodes])
    cols = np.concatenate([cols, loop_nodes])
    vals = np.concatenate([vals, np.ones(len(loop_nodes))])

    deg = np.zeros(n)
    np.add.at(deg, rows, vals)
    inv_sqrt = 1.0 / np.sqrt(deg)
    vals = vals * inv_sqrt[rows] * inv_sqrt[cols]
    return SparseMatrix(n, n, rows, cols, vals)


def mean_adjacency(g: Graph, weighted=True) -> SparseMatrix:
    """Row-normalized adjacency (no self entries): the mean neighbor operator."""
    if g.n_nodes == 0:
        raise PreconditionError("mean_adjacency: empty graph")
    n = g.n_nodes
    if not g.n_edges:
        return SparseMatrix(n, n, [], [], [])
    src = g.edges[:, 0]
    dst = g.edges[:, 1]
    w = g.weights if weighted else np.ones_like(g.weights)
    rows = np.concatenate([src, dst])
    cols = np.concatenate([dst, src])
    vals = np.concatenate([w, w])
    deg = np.zeros(n)
    np.add.at(deg, rows, vals)
    deg[deg == 0.0] = 1.0
    return SparseMatrix(n, n, rows, cols, vals / deg[rows])
