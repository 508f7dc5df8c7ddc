"""Late fusion of graph-model probabilities with external text-classifier
probabilities: imputation of missing media, a trained affine fusion layer,
a deterministic logistic-regression meta-learner, and the four-stage
pipeline that feeds it.

Probability files are JSON objects mapping media id to a C-vector. A
sibling ``<name>.meta.json`` file may name the source model and the label
order. The all-zero vector is a legal placeholder for missing media.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import FitError, IngestionError, PipelineError, PreconditionError
from .graph.metrics import MetricsReport, compute_metrics


@dataclass
class ProbabilityTable:
    vectors: dict                 # media id -> np.ndarray(C)
    n_classes: int
    source: str = "unknown"
    labels: list | None = None

    def __contains__(self, media_id):
        return media_id in self.vectors

    def __len__(self):
        return len(self.vectors)

    def get(self, media_id):
        return self.vectors.get(media_id)

    def ids(self):
        return set(self.vectors)

    def save(self, path):
        obj = {k: [float(x) for x in v] for k, v in sorted(self.vectors.items())}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh)
        meta = {"source": self.source}
        if self.labels is not None:
            meta["labels"] = self.labels
        with open(_meta_path(path), "w", encoding="utf-8") as fh:
            json.dump(meta, fh)


def _meta_path(path):
    base, _ = os.path.splitext(str(path))
    return base + ".meta.json"


def _validate_vector(media_id, vec, n_classes):
    arr = np.asarray(vec, dtype=np.float64)
    if arr.shape != (n_classes,):
        raise IngestionError(
            f"media {media_id!r}: probability vector must have length {n_classes}"
        )
    if not np.isfinite(arr).all() or (arr < 0).any():
        raise IngestionError(
            f"media {media_id!r}: probabilities must be finite and non-negative"
        )
    total = arr.sum()
    if total != 0.0 and abs(total - 1.0) > 1e-6:
        raise IngestionError(
            f"media {media_id!r}: vector sums to {total:.6f}, expected 1 or the "
            "all-zero placeholder"
        )
    return arr


def load_probabilities(path, n_classes) -> ProbabilityTable:
    """Read a probability JSON file plus its sibling metadata if present."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise IngestionError(f"{path}: invalid JSON ({e})") from None
    if raw == {} or raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise IngestionError(f"{path}: expected an object mapping media id to vector")
    vectors = {
        str(k): _validate_vector(k, v, n_classes) for k, v in raw.items()
    }
    source, labels = os.path.basename(str(path)), None
    meta_file = _meta_path(path)
    if os.path.exists(meta_file):
        with open(meta_file, encoding="utf-8") as fh:
            meta = json.load(fh)
        source = meta.get("source", source)
        labels = meta.get("labels")
    return ProbabilityTable(vectors, n_classes, source=source, labels=labels)


def impute_missing(table: ProbabilityTable, fallback, universe) -> tuple:
    """Complete ``table`` over ``universe``; returns (table, provenance).

    ``fallback`` is either the string "zeros" or another ProbabilityTable
    (graph-model probabilities). Present vectors are never altered;
    provenance records per id whether the value came from text, graph, or
    the zero placeholder.
    """
    out = {}
    provenance = {}
    graph_mode = isinstance(fallback, ProbabilityTable)
    for media_id in universe:
        if media_id in table:
            out[media_id] = table.get(media_id).copy()
            provenance[media_id] = "text"
        elif graph_mode:
            vec = fallback.get(media_id)
            if vec is None:
                raise PipelineError(
                    f"graph fallback table is missing media {media_id!r}"
                )
            out[media_id] = vec.copy()
            provenance[media_id] = "graph"
        else:
            out[media_id] = np.zeros(table.n_classes)
            provenance[media_id] = "zero"
    completed = ProbabilityTable(out, table.n_classes, source=table.source,
                                 labels=table.labels)
    return completed, provenance


def fuse_text_graph(p_text, p_graph, weights, bias) -> np.ndarray:
    """Softmax of an affine map over the concatenated 2C probability vector."""
    p_text = np.asarray(p_text, dtype=np.float64)
    p_graph = np.asarray(p_graph, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    b = np.asarray(bias, dtype=np.float64)
    c = p_text.shape[-1]
    if w.shape != (2 * c, c):
        raise PreconditionError(f"fusion weights must be {2 * c}x{c}")
    z = np.concatenate([p_text, p_graph], axis=-1) @ w + b
    return special.softmax(z, axis=-1)


@dataclass
class MetaLearner:
    weights: np.ndarray           # n_features x C
    intercept: np.ndarray         # C
    l2: float
    n_iterations: int = 0
    converged: bool = False

    def predict_proba(self, features) -> np.ndarray:
        z = np.asarray(features, dtype=np.float64) @ self.weights + self.intercept
        return special.softmax(z, axis=-1)

    def predict(self, features) -> np.ndarray:
        return self.predict_proba(features).argmax(axis=-1)


def fit_meta_learner(features, gold, n_classes=None, l2=1.0, max_iter=5000,
                     tol=1e-6) -> MetaLearner:
    """Multinomial logistic regression by full-batch gradient descent.

    The step size is 1/L for the curvature bound L = lambda_max(X^T X)/4 + l2,
    so the fit is deterministic: same data in, bit-identical learner out.
    Stops when the total gradient norm falls below ``tol``.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(gold, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise PreconditionError("features and gold labels misaligned")
    classes = int(y.max()) + 1 if n_classes is None else n_classes
    if np.unique(y).size < 2:
        raise FitError("meta-learner needs at least two classes in training data")
    onehot = np.eye(classes)[y]

    # deterministic power iteration for the curvature bound; the softmax
    # Hessian is at most I/2 and the intercept acts as a ones column
    xa = np.hstack([x, np.ones((x.shape[0], 1))])
    v = np.ones(xa.shape[1]) / np.sqrt(xa.shape[1])
    for _ in range(100):
        v = xa.T @ (xa @ v)
        norm = np.linalg.norm(v)
        if norm == 0:
            break
        v = v / norm
    lip = float(v @ (xa.T @ (xa @ v))) / 2.0 + l2
    step = 1.0 / max(lip, 1e-12)

    w = np.zeros((x.shape[1], classes))
    b = np.zeros(classes)
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        probs = special.softmax(x @ w + b, axis=-1)
        delta = probs - onehot
        gw = x.T @ delta + l2 * w
        gb = delta.sum(axis=0)
        gnorm = np.sqrt((gw * gw).sum() + (gb * gb).sum())
        if gnorm < tol:
            converged = True
            break
        w = w - step * gw
        b = b - step * gb
    return MetaLearner(w, b, l2, n_iterations=it, converged=converged)


# ---------------------------------------------------------------------------
# staged pipeline
# ---------------------------------------------------------------------------

@dataclass
class StageResult:
    stage: int
    metrics: MetricsReport
    fused: ProbabilityTable
    metrics_std: dict | None = None
    per_seed: list = field(default_factory=list)


def _feature_matrix(tables, ids):
    cols = []
    for t in tables:
        cols.append(np.stack([t.get(i) for i in ids]))
    return np.concatenate(cols, axis=1)


def _require(tables, stage, names):
    for t, name in zip(tables, names):
        if t is None:
            raise PipelineError(f"stage {stage} requires the {name} table")


def _evaluate(tables, gold, train_ids, test_ids, n_classes, l2):
    train_x = _feature_matrix(tables, train_ids)
    test_x = _feature_matrix(tables, test_ids)
    train_y = np.asarray([gold[i] for i in train_ids])
    test_y = np.asarray([gold[i] for i in test_ids])
    learner = fit_meta_learner(train_x, train_y, n_classes=n_classes, l2=l2)
    pred = learner.predict(test_x)
    metrics = compute_metrics(pred, test_y, n_classes)
    fused_probs = learner.predict_proba(test_x)
    fused = ProbabilityTable(
        {i: fused_probs[k] for k, i in enumerate(test_ids)}, n_classes,
        source="meta-learner",
    )
    return metrics, fused


def run_stage_pipeline(stage, gold, train_ids, test_ids, n_classes,
                       text=None, text_secondary=None, graph=None,
                       graph_groups=None, l2=1.0) -> StageResult:
    """Figure-style staged fusion over a labeled media universe.

    * stage 1: one text table, missing media imputed with zeros
    * stage 2: one text table, missing media imputed from the graph table
    * stage 3: two text tables (each zero-imputed), concatenated
    * stage 4: stage-3 features concatenated with one group of graph tables
      per seed; metrics are reported as mean with a std dict across groups
    """
    if stage not in (1, 2, 3, 4):
        raise PipelineError(f"unknown stage {stage}")
    universe = sorted(set(train_ids) | set(test_ids))
    missing_gold = [i for i in universe if i not in gold]
    if missing_gold:
        raise PipelineError(f"gold labels missing for {missing_gold[:3]}")
    train_ids = sorted(train_ids)
    test_ids = sorted(test_ids)

    if stage == 1:
        _require([text], 1, ["text"])
        completed, _ = impute_missing(text, "zeros", universe)
        metrics, fused = _evaluate([completed], gold, train_ids, test_ids,
                                   n_classes, l2)
        return StageResult(1, metrics, fused)

    if stage == 2:
        _require([text, graph], 2, ["text", "graph"])
        completed, _ = impute_missing(text, graph, universe)
        metrics, fused = _evaluate([completed], gold, train_ids, test_ids,
                                   n_classes, l2)
        return StageResult(2, metrics, fused)

    if stage == 3:
        _require([text, text_secondary], 3, ["text", "secondary text"])
        a, _ = impute_missing(text, "zeros", universe)
        b, _ = impute_missing(text_secondary, "zeros", universe)
        metrics, fused = _evaluate([a, b], gold, train_ids, test_ids,
                                   n_classes, l2)
        return StageResult(3, metrics, fused)

    # stage 4
    _require([text, text_secondary], 4, ["text", "secondary text"])
    if not graph_groups:
        raise PipelineError("stage 4 requires at least one group of graph tables")
    a, _ = impute_missing(text, "zeros", universe)
    b, _ = impute_missing(text_secondary, "zeros", universe)
    per_seed = []
    for group in graph_groups:
        completed_group = []
        for t in group:
            ct, _ = impute_missing(t, "zeros", universe)
            completed_group.append(ct)
        metrics, fused = _evaluate([a, b] + completed_group, gold, train_ids,
                                   test_ids, n_classes, l2)
        per_seed.append((metrics, fused))
    headline = np.array([
        [m.macro_f1, m.accuracy, m.avg_recall] for m, _ in per_seed
    ])
    mean = headline.mean(axis=0)
    std = headline.std(axis=0, ddof=1) if len(per_seed) > 1 else np.zeros(3)
    best = per_seed[0]
    summary = MetricsReport(
        macro_f1=float(mean[0]), accuracy=float(mean[1]),
        avg_recall=float(mean[2]), precision=best[0].precision,
        recall=best[0].recall, f1=best[0].f1, confusion=best[0].confusion,
    )
    std_dict = {
        "macro_f1": 100.0 * float(std[0]),
        "accuracy": 100.0 * float(std[1]),
        "avg_recall": 100.0 * float(std[2]),
    }
    return StageResult(4, summary, best[1], metrics_std=std_dict,
                       per_seed=[m for m, _ in per_seed])
