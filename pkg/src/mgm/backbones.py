"""Message-passing encoders (GCN, SGC, GraphSAGE) and supervised pre-training.

The encoder emits embeddings of width ``hidden[-1]``; classification always
goes through a separate linear head so embeddings stay usable as memory
entries. Default configurations:

* gcn:  2 propagation layers, hidden 16, ReLU, no dropout
* sgc:  2 propagation hops then a single linear map to 256
* sage: 2 layers of [self || mean-neighbor] -> linear, hidden 64, ELU
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .diff import (
    Adam,
    SparseMatrix,
    Tensor,
    add,
    concat,
    dropout,
    elu,
    matmul,
    relu,
    softmax,
    softmax_cross_entropy,
    spmm,
)
from .errors import ConfigError, TrainingError
from .graph.data import Graph, mean_adjacency, normalize_adjacency

DEFAULT_CONFIGS = {
    "gcn": dict(hidden=[16, 16], activation="relu", dropout=0.0),
    "sgc": dict(hidden=[256], hops=2, activation="none", dropout=0.0),
    "sage": dict(hidden=[64, 64], activation="elu", dropout=0.0),
}


@dataclass
class EncoderConfig:
    kind: str
    hidden: list
    hops: int = 2
    activation: str = "relu"
    dropout: float = 0.0

    def __post_init__(self):
        if self.kind not in ("gcn", "sgc", "sage"):
            raise ConfigError(f"unknown encoder kind {self.kind!r}")
        if not self.hidden or any(h <= 0 for h in self.hidden):
            raise ConfigError("hidden widths must be positive")
        if not (0.0 <= self.dropout < 1.0):
            raise ConfigError("dropout must lie in [0, 1)")
        if self.activation not in ("relu", "elu", "none"):
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.kind == "sgc" and self.hops < 0:
            raise ConfigError("hops must be non-negative")

    @property
    def n_layers(self) -> int:
        return len(self.hidden)

    @property
    def out_dim(self) -> int:
        return self.hidden[-1]

    @classmethod
    def default(cls, kind: str) -> "EncoderConfig":
        if kind not in DEFAULT_CONFIGS:
            raise ConfigError(f"unknown encoder kind {kind!r}")
        return cls(kind=kind, **DEFAULT_CONFIGS[kind])


def _activation(config):
    if config.activation == "relu":
        return relu
    if config.activation == "elu":
        return elu
    return lambda t: t


def _glorot(rng, n_in, n_out):
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_in, n_out))


def init_encoder_params(config: EncoderConfig, n_features, rng) -> dict:
    """Glorot-uniform weights and zero biases, keyed for the optimizer."""
    params = {}
    if config.kind == "sgc":
        params["enc.w0"] = Tensor(
            _glorot(rng, n_features, config.hidden[-1]), requires_grad=True
        )
        params["enc.b0"] = Tensor(np.zeros(config.hidden[-1]), requires_grad=True)
        return params
    width_in = n_features
    for layer, width in enumerate(config.hidden):
        fan_in = 2 * width_in if config.kind == "sage" else width_in
        params[f"enc.w{layer}"] = Tensor(
            _glorot(rng, fan_in, width), requires_grad=True
        )
        params[f"enc.b{layer}"] = Tensor(np.zeros(width), requires_grad=True)
        width_in = width
    return params


def init_head_params(d, n_classes, rng) -> dict:
    return {
        "head.w": Tensor(_glorot(rng, d, n_classes), requires_grad=True),
        "head.b": Tensor(np.zeros(n_classes), requires_grad=True),
    }


def build_adjacency(g: Graph, config: EncoderConfig, weighted=True) -> SparseMatrix:
    """Propagation operator per encoder: symmetric renormalized for GCN/SGC,
    mean-neighbor for GraphSAGE."""
    if config.kind == "sage":
        return mean_adjacency(g, weighted=weighted)
    return normalize_adjacency(g, weighted=weighted)


def encode(config: EncoderConfig, params, adj: SparseMatrix, x,
           training=False, rng=None) -> Tensor:
    """Node embeddings of shape N x hidden[-1]."""
    h = x if isinstance(x, Tensor) else Tensor(x)
    act = _activation(config)
    if config.kind == "sgc":
        for _ in range(config.hops):
            h = spmm(adj, h)
        return add(matmul(h, params["enc.w0"]), params["enc.b0"])
    for layer in range(config.n_layers):
        if config.dropout > 0 and training:
            h = dropout(h, config.dropout, rng, training=True)
        if config.kind == "gcn":
            h = spmm(adj, h)
            h = add(matmul(h, params[f"enc.w{layer}"]), params[f"enc.b{layer}"])
        else:  # sage
            nb = spmm(adj, h)
            h = add(
                matmul(concat([h, nb], axis=1), params[f"enc.w{layer}"]),
                params[f"enc.b{layer}"],
            )
        h = act(h)
    return h


def head_logits(z, params) -> Tensor:
    return add(matmul(z, params["head.w"]), params["head.b"])


def head_probs(z, params) -> Tensor:
    return softmax(head_logits(z, params))


class EarlyStopper:
    """Halt after ``patience`` consecutive evaluations without improvement."""

    def __init__(self, patience=10, mode="min"):
        self.patience = patience
        self.sign = 1.0 if mode == "min" else -1.0
        self.best = np.inf
        self.best_step = -1
        self.stale = 0

    def update(self, value, step) -> bool:
        """Record a metric; return True when training should stop."""
        v = self.sign * value
        if v < self.best - 1e-12:
            self.best = v
            self.best_step = step
            self.stale = 0
            return False
        self.stale += 1
        return self.stale >= self.patience


@dataclass
class PretrainResult:
    params: dict
    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    best_epoch: int = -1
    minutes: float = 0.0


def onehot_labels(g: Graph) -> np.ndarray:
    out = np.zeros((g.n_nodes, g.n_classes))
    mask = g.labeled_mask
    out[mask, g.labels[mask]] = 1.0
    return out


def pretrain(config: EncoderConfig, g: Graph, masks, epochs=300, patience=10,
             lr=0.001, seed=0, weighted=True, rng=None) -> PretrainResult:
    """Train encoder + head by masked cross-entropy with Adam.

    Early stopping watches the validation loss; the best-validation
    parameters are restored before returning. When the validation mask is
    empty the stopper watches the training loss instead.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    train_mask = masks.active_train
    val_mask = masks.val
    if not train_mask.any():
        raise TrainingError("pretrain: empty training mask")

    adj = build_adjacency(g, config, weighted=weighted)
    x = Tensor(g.features)
    targets = Tensor(onehot_labels(g))
    params = init_encoder_params(config, g.n_features, rng)
    params.update(init_head_params(config.out_dim, g.n_classes, rng))
    opt = Adam(params, lr=lr)
    stopper = EarlyStopper(patience=patience, mode="min")
    watch_val = bool(val_mask.any())

    best = {k: p.data.copy() for k, p in params.items()}
    best_epoch = 0
    best_val = np.inf
    result = PretrainResult(params)
    start = time.perf_counter()
    for epoch in range(epochs):
        opt.zero_grad()
        z = encode(config, params, adj, x, training=True, rng=rng)
        loss = softmax_cross_entropy(head_logits(z, params), targets, train_mask)
        lval = loss.item()
        if not np.isfinite(lval):
            raise TrainingError(f"non-finite pre-training loss at epoch {epoch}")
        loss.backward()
        opt.step()

        result.train_losses.append(lval)
        if watch_val:
            z_eval = encode(config, params, adj, x, training=False)
            vloss = softmax_cross_entropy(
                head_logits(z_eval, params), targets, val_mask
            ).item()
        else:
            vloss = lval
        result.val_losses.append(vloss)
        if vloss < best_val - 1e-12:
            best_val = vloss
            best = {k: p.data.copy() for k, p in params.items()}
            best_epoch = epoch
        if stopper.update(vloss, epoch):
            break

    for k, p in params.items():
        p.data = best[k]
    result.best_epoch = best_epoch
    result.minutes = (time.perf_counter() - start) / 60.0
    return result


ENCODER_FORMAT = "mgm-encoder"
ENCODER_VERSION = 1


def save_encoder(config: EncoderConfig, params: dict, path):
    """Write a standalone encoder checkpoint (JSON, versioned layout)."""
    import json

    obj = {
        "format": ENCODER_FORMAT,
        "version": ENCODER_VERSION,
        "config": {
            "kind": config.kind,
            "hidden": config.hidden,
            "hops": config.hops,
            "activation": config.activation,
            "dropout": config.dropout,
        },
        "params": {k: p.data.tolist() for k, p in params.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
    return path


def load_encoder(path):
    """Read an encoder checkpoint back into (config, params)."""
    import json

    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("format") != ENCODER_FORMAT:
        raise ConfigError(f"{path}: not an encoder checkpoint")
    if obj.get("version") != ENCODER_VERSION:
        raise ConfigError(f"{path}: unsupported encoder checkpoint version")
    config = EncoderConfig(**obj["config"])
    params = {
        k: Tensor(np.asarray(v, dtype=np.float64), requires_grad=True)
        for k, v in obj["params"].items()
    }
    return config, params
