"""Memory-augmented probabilistic node classification trained by
variational EM.

Generative side (parameters collectively called theta):
  * embeddings Z ~ N(encoder(X, adj), sigma1^2 I)
  * candidate weights omega ~ Dir(alpha), kept sparse by alpha < 1
  * similar-node choices T ~ Mult(K, softmax(cos(z, memory)/tau + ln omega))
  * labels fuse a linear head over Z with the label vote of the chosen
    candidates: eta * p(y|z) + (1 - eta) * p(y|T)

Variational side (phi, lambda):
  * q(omega) = Dir(lambda), lambda positive via softplus
  * q(T | labels): bilinear score between stored embeddings plus a learned
    same-label bonus, softmax over candidates
  * q(Z | T, labels): encoder mean shifted by a small correction network
    over [expected candidate embedding || one-hot label], learned per-node
    variance

The E-step ascends the evidence bound in (lambda, phi) with theta frozen;
the M-step does the reverse. Memory embeddings are refreshed after every
M-step. Queries never see themselves as candidates.
"""

import copy
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..backbones import (
    EncoderConfig,
    PretrainResult,
    build_adjacency,
    encode,
    head_probs,
    onehot_labels,
    pretrain,
)
from ..diff import (
    Adam,
    Tensor,
    astensor,
    concat,
    exp,
    log,
    masked_softmax,
    matmul,
    mul,
    slice_cols,
    softplus,
    sqrt,
    square,
    take_rows,
    tsum,
    xlogy,
)
from ..errors import ConfigError, PredictionError, PreconditionError, TrainingError
from ..graph.data import Graph
from ..graph.metrics import compute_metrics
from ..memory import (
    MemoryBank,
    build_memory,
    expected_omega,
    refresh,
    select_candidates,
)
from ..rng import RngHub
from .divergences import kl_dirichlet, kl_gaussian

log_ = logging.getLogger("mgm")

CHECKPOINT_FORMAT = "mgm-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class MgmConfig:
    k: int = 3
    eta: float = 0.8
    alpha: float | list = 0.1
    sigma1_init: float = 1.0
    mc_samples: int = 1
    em_iters: int = 50
    tau: float = 1.0
    inner_steps: int = 5
    patience: int = 10
    lr: float = 0.001
    mass_threshold: float = 0.90
    merge_val: bool = True
    pretrain_epochs: int = 300

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("K must be >= 1")
        if not (0.0 <= self.eta <= 1.0):
            raise ConfigError("eta must lie in [0, 1]")
        alpha = np.asarray(self.alpha, dtype=float)
        if (alpha <= 0).any():
            raise ConfigError("alpha must be strictly positive")
        if self.sigma1_init <= 0:
            raise ConfigError("sigma1 must be strictly positive")
        if self.mc_samples < 1 or self.em_iters < 0 or self.inner_steps < 1:
            raise ConfigError("sample and iteration counts must be positive")
        if self.tau <= 0:
            raise ConfigError("temperature must be positive")

    def alpha_vector(self, n) -> np.ndarray:
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.ndim == 0:
            return np.full(n, float(alpha))
        if alpha.shape != (n,):
            raise ConfigError(f"alpha vector must have length {n}")
        return alpha


def _inv_softplus(y):
    return float(np.log(np.expm1(y)))


# ---------------------------------------------------------------------------
# spec-surface operations
# ---------------------------------------------------------------------------

def classify_local(z, head_params) -> Tensor:
    """Softmax of the linear head over embedding rows."""
    return head_probs(astensor(z), head_params)


def classify_global(t_counts, memory_labels_onehot) -> np.ndarray:
    """Label histogram of the selected similar nodes, normalized by K."""
    t = np.asarray(t_counts, dtype=np.float64)
    k = t.sum(axis=-1, keepdims=t.ndim > 1)
    total = float(np.min(k))
    if total <= 0:
        raise PreconditionError("T counts must sum to a positive K")
    return (t @ np.asarray(memory_labels_onehot, dtype=np.float64)) / k


def fuse_predictions(p_local, p_global, eta) -> Tensor:
    """eta * p_local + (1 - eta) * p_global."""
    if not (0.0 <= eta <= 1.0):
        raise PreconditionError("eta must lie in [0, 1]")
    p_local, p_global = astensor(p_local), astensor(p_global)
    return mul(p_local, eta) + mul(p_global, 1.0 - eta)


def _row_normalize(z: Tensor) -> Tensor:
    norms = sqrt(tsum(square(z), axis=1, keepdims=True)) + 1e-12
    return z / norms


def similar_node_prior(query_embeddings, memory: MemoryBank, omega, k, tau=1.0,
                       query_node_indices=None) -> Tensor:
    """Categorical candidate distribution per query row.

    Logits are cosine similarity against the stored embeddings, scaled by
    1/tau, plus ln omega; the multinomial over candidates draws ``k`` times
    from this categorical. Queries present in the memory have their own row
    masked out; if that leaves a query with no candidate at all, the
    distribution falls back to uniform with a logged warning.
    """
    if memory.size == 0:
        raise PreconditionError("similar_node_prior: empty memory")
    omega = np.asarray(omega, dtype=np.float64)
    if omega.shape != (memory.size,):
        raise PreconditionError("omega misaligned with memory")
    q = astensor(query_embeddings)
    mem_normed = memory.embeddings / (
        np.linalg.norm(memory.embeddings, axis=1, keepdims=True) + 1e-12
    )
    cos = matmul(_row_normalize(q), Tensor(mem_normed.T))
    with np.errstate(divide="ignore"):
        log_omega = np.log(omega)
    logits = mul(cos, 1.0 / tau) + Tensor(log_omega)

    n_q = q.shape[0]
    mask = np.ones((n_q, memory.size), dtype=bool)
    if query_node_indices is not None:
        pos = {int(v): i for i, v in enumerate(memory.node_indices)}
        for row, node in enumerate(np.asarray(query_node_indices)):
            hit = pos.get(int(node))
            if hit is not None:
                mask[row, hit] = False
    mask &= omega > 0.0

    dead = ~mask.any(axis=1)
    if dead.any():
        log_.warning(
            "similar_node_prior: %d query row(s) had every candidate masked; "
            "falling back to uniform", int(dead.sum())
        )
        mask[dead] = True
        probs = masked_softmax(logits, mask)
        keep = Tensor((~dead)[:, None].astype(float))
        uniform = Tensor(dead[:, None] * np.full((n_q, memory.size), 1.0 / memory.size))
        return mul(probs, keep) + uniform
    return masked_softmax(logits, mask)


# ---------------------------------------------------------------------------
# variational state and model
# ---------------------------------------------------------------------------

class VariationalState:
    """phi and lambda: everything the E-step owns."""

    def __init__(self, n_candidates, d, n_classes, alpha_vec, rng):
        lam0 = _inv_softplus(float(alpha_vec.mean()) + 1.0 / n_candidates)
        self.params = {
            "var.lam_raw": Tensor(np.full(n_candidates, lam0), requires_grad=True),
            "var.wq": Tensor(
                rng.normal(scale=0.01, size=(d, d)) + np.eye(d), requires_grad=True
            ),
            "var.beta": Tensor(np.array(1.0), requires_grad=True),
            "var.corr_w": Tensor(np.zeros((d + n_classes, d + 1)), requires_grad=True),
            "var.corr_b": Tensor(np.zeros(d + 1), requires_grad=True),
        }

    def lam(self) -> Tensor:
        return softplus(self.params["var.lam_raw"])

    def expected_omega(self) -> np.ndarray:
        return expected_omega(self.lam().data)


class MgmModel:
    """Bundles the encoder, head, priors, variational state and memory."""

    def __init__(self, graph: Graph, masks, encoder_config: EncoderConfig,
                 config: MgmConfig, seed=0, weighted=True):
        self.graph = graph
        self.masks = masks
        self.encoder_config = encoder_config
        self.config = config
        self.seed = seed
        self.weighted = weighted
        self.hub = RngHub(seed)
        self.adj = build_adjacency(graph, encoder_config, weighted=weighted)
        self.features = Tensor(graph.features)
        self.labels_onehot = np.asarray(onehot_labels(graph))

        em_mask = masks.active_train.copy()
        if config.merge_val and masks.val.any():
            em_mask |= masks.val
        self.em_mask = em_mask
        self.em_idx = np.nonzero(em_mask)[0]

        self.theta: dict = {}
        self.var: VariationalState | None = None
        self.memory: MemoryBank | None = None
        self.memory_sampled: MemoryBank | None = None
        self.pretrain_result: PretrainResult | None = None

    # -- parameter plumbing -------------------------------------------------

    def theta_params(self) -> dict:
        return self.theta

    def var_params(self) -> dict:
        return self.var.params

    def sigma1_sq(self) -> Tensor:
        return softplus(self.theta["sigma1_raw"])

    def _encode_eval(self) -> Tensor:
        return encode(self.encoder_config, self.theta, self.adj, self.features)

    # -- setup ---------------------------------------------------------------

    def initialize(self, pretrain_result: PretrainResult):
        self.pretrain_result = pretrain_result
        self.theta = dict(pretrain_result.params)
        self.theta["sigma1_raw"] = Tensor(
            np.array(_inv_softplus(self.config.sigma1_init)), requires_grad=True
        )
        self.memory = build_memory(self._encode_eval, self.graph, self.em_mask)
        alpha_vec = self.config.alpha_vector(self.memory.size)
        self.var = VariationalState(
            self.memory.size,
            self.encoder_config.out_dim,
            self.graph.n_classes,
            alpha_vec,
            self.hub.stream("var-init"),
        )

    # -- evidence bound ------------------------------------------------------

    def elbo(self, noise=None) -> tuple:
        """Evidence bound over the EM-training nodes; returns (value, terms).

        ``noise`` is the reparameterization draw for the embedding sample
        (zeros give the deterministic evaluation used for monitoring).
        """
        if self.memory is None:
            raise PreconditionError("elbo: memory not populated")
        if self.em_idx.size == 0:
            raise PreconditionError("elbo: empty training mask")
        cfg = self.config
        mem = self.memory
        d = self.encoder_config.out_dim
        n_q = self.em_idx.size

        alpha_vec = cfg.alpha_vector(mem.size)
        lam = self.var.lam()
        kl_dir = kl_dirichlet(lam, Tensor(alpha_vec))

        # q(T | labels): bilinear score over stored embeddings + label bonus
        zhat = Tensor(mem.embeddings)
        scores = matmul(matmul(zhat, self.var.params["var.wq"]), Tensor(mem.embeddings.T))
        agree = (mem.labels_onehot @ mem.labels_onehot.T)
        q_logits = scores + mul(Tensor(agree), self.var.params["var.beta"])
        not_self = ~np.eye(mem.size, dtype=bool)
        if mem.size == 1:
            raise TrainingError("elbo: a single candidate cannot exclude itself")
        q_probs = masked_softmax(q_logits, not_self)

        # p(T | omega, memory): live query embeddings against the memory
        enc = encode(self.encoder_config, self.theta, self.adj, self.features)
        z_query = take_rows(enc, self.em_idx)
        mem_normed = mem.embeddings / (
            np.linalg.norm(mem.embeddings, axis=1, keepdims=True) + 1e-12
        )
        cos = matmul(_row_normalize(z_query), Tensor(mem_normed.T))
        omega_bar = lam / tsum(lam)
        p_logits = mul(cos, 1.0 / cfg.tau) + log(omega_bar)
        p_probs = masked_softmax(p_logits, not_self)

        kl_t = mul(
            tsum(xlogy(q_probs, q_probs)) - tsum(xlogy(q_probs, p_probs)),
            float(cfg.k),
        )

        # q(Z | T, labels): encoder mean + correction, per-node variance
        y_query = self.labels_onehot[self.em_idx]
        z_agg = matmul(q_probs, zhat)
        corr_in = concat([z_agg, Tensor(y_query)], axis=1)
        corr_out = matmul(corr_in, self.var.params["var.corr_w"]) + self.var.params["var.corr_b"]
        shift = slice_cols(corr_out, 0, d)
        log_var = slice_cols(corr_out, d, d + 1)
        sigma2_sq = exp(log_var)
        sigma1_sq = self.sigma1_sq()

        q_mean = z_query + shift
        kl_z = kl_gaussian(q_mean, sigma2_sq, z_query, sigma1_sq)

        # expected log-likelihood under the fused predictive
        if noise is None:
            noise = np.zeros((cfg.mc_samples, n_q, d))
        noise = np.asarray(noise, dtype=np.float64)
        if noise.ndim == 2:
            noise = noise[None]
        p_glob = matmul(q_probs, Tensor(mem.labels_onehot))
        targets = Tensor(y_query)
        ll_total = None
        for s in range(noise.shape[0]):
            z_sample = q_mean + mul(sqrt(sigma2_sq), Tensor(noise[s]))
            p_local = head_probs(z_sample, self.theta)
            fused = fuse_predictions(p_local, p_glob, cfg.eta)
            ll_s = tsum(xlogy(targets, fused))
            ll_total = ll_s if ll_total is None else ll_total + ll_s
        ll = mul(ll_total, 1.0 / noise.shape[0])

        value = ll - kl_dir - kl_z - kl_t
        terms = {
            "log_likelihood": ll.item(),
            "kl_dirichlet": kl_dir.item(),
            "kl_gaussian": kl_z.item(),
            "kl_multinomial": kl_t.item(),
        }
        if not np.isfinite(value.item()):
            raise TrainingError(f"non-finite evidence bound: {terms}")
        return value, terms

    # -- EM steps -------------------------------------------------------------

    def _ascend(self, optimizer, steps, rng):
        cfg = self.config
        n_q = self.em_idx.size
        d = self.encoder_config.out_dim
        last = None
        for _ in range(steps):
            noise = rng.standard_normal((cfg.mc_samples, n_q, d))
            optimizer.zero_grad()
            value, _ = self.elbo(noise=noise)
            loss = mul(value, -1.0)
            loss.backward()
            optimizer.step()
            last = value.item()
        return last

    def e_step(self, optimizer, steps=None, rng=None):
        """Ascend the bound in (lambda, phi) with theta frozen."""
        steps = steps or self.config.inner_steps
        rng = rng or self.hub.stream("em-noise")
        flags = {k: p.requires_grad for k, p in self.theta.items()}
        for p in self.theta.values():
            p.requires_grad = False
            p.grad = None
        try:
            return self._ascend(optimizer, steps, rng)
        finally:
            for k, p in self.theta.items():
                p.requires_grad = flags[k]

    def m_step(self, optimizer, steps=None, rng=None):
        """Ascend the bound in theta with the variational state frozen."""
        steps = steps or self.config.inner_steps
        rng = rng or self.hub.stream("em-noise")
        flags = {k: p.requires_grad for k, p in self.var.params.items()}
        for p in self.var.params.values():
            p.requires_grad = False
            p.grad = None
        try:
            return self._ascend(optimizer, steps, rng)
        finally:
            for k, p in self.var.params.items():
                p.requires_grad = flags[k]

    def refresh_memory(self):
        self.memory = refresh(self.memory, self._encode_eval)

    # -- prediction ------------------------------------------------------------

    def local_probs(self) -> np.ndarray:
        z = self._encode_eval()
        return head_probs(z, self.theta).data

    def omega_for(self, memory: MemoryBank) -> np.ndarray:
        """Expected candidate weights aligned with (a subset) memory bank."""
        full = self.var.expected_omega()
        if memory is self.memory or memory.size == self.memory.size:
            return full
        pos = {int(v): i for i, v in enumerate(self.memory.node_indices)}
        sub_idx = np.asarray([pos[int(v)] for v in memory.node_indices])
        w = full[sub_idx]
        return w / w.sum()

    def predict(self, nodes=None, memory=None, eta=None) -> tuple:
        """Fused probabilities and argmax labels for the requested nodes."""
        cfg = self.config
        eta = cfg.eta if eta is None else eta
        if nodes is None:
            nodes = np.arange(self.graph.n_nodes)
        nodes = np.asarray(nodes, dtype=np.int64)

        z = self._encode_eval()
        p_local_all = head_probs(z, self.theta).data
        p_local = p_local_all[nodes]
        if eta == 1.0:
            return p_local, p_local.argmax(axis=1)

        memory = memory if memory is not None else (self.memory_sampled or self.memory)
        if memory is None or memory.size == 0:
            raise PredictionError("predict: empty memory")
        omega = self.omega_for(memory)
        probs_t = similar_node_prior(
            Tensor(z.data[nodes]), memory, omega, cfg.k, cfg.tau,
            query_node_indices=nodes,
        ).data

        # deterministic top-K similar-node set, ties broken by memory row
        k = min(cfg.k, memory.size)
        cols = np.arange(memory.size)
        p_glob = np.zeros((nodes.size, self.graph.n_classes))
        for row in range(nodes.size):
            order = np.lexsort((cols, -probs_t[row]))
            top = order[:k]
            counts = np.zeros(memory.size)
            counts[top] = 1.0
            p_glob[row] = classify_global(counts, memory.labels_onehot)
        fused = fuse_predictions(p_local, p_glob, eta).data
        return fused, fused.argmax(axis=1)

    def val_macro_f1(self) -> float:
        val = np.nonzero(self.masks.val)[0]
        if val.size == 0:
            return float("nan")
        _, pred = self.predict(nodes=val, memory=self.memory)
        return compute_metrics(pred, self.graph.labels[val], self.graph.n_classes).macro_f1

    # -- snapshots ---------------------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "theta": {k: p.data.copy() for k, p in self.theta.items()},
            "var": {k: p.data.copy() for k, p in self.var.params.items()},
            "memory": copy.deepcopy(self.memory),
        }

    def restore(self, snap: dict):
        for k, p in self.theta.items():
            p.data = snap["theta"][k].copy()
        for k, p in self.var.params.items():
            p.data = snap["var"][k].copy()
        self.memory = copy.deepcopy(snap["memory"])


# ---------------------------------------------------------------------------
# training driver
# ---------------------------------------------------------------------------

@dataclass
class TrainHistory:
    elbo: list = field(default_factory=list)
    log_likelihood: list = field(default_factory=list)
    kl_dirichlet: list = field(default_factory=list)
    kl_gaussian: list = field(default_factory=list)
    kl_multinomial: list = field(default_factory=list)
    val_macro_f1: list = field(default_factory=list)
    best_iteration: int = -1
    stopped_at: int = -1


@dataclass
class TrainResult:
    model: MgmModel
    memory: MemoryBank
    memory_sampled: MemoryBank
    history: TrainHistory
    pretrain: PretrainResult
    minutes: float


def train_em(graph: Graph, masks, encoder_config: EncoderConfig,
             config: MgmConfig, seed=0, weighted=True) -> TrainResult:
    """Pre-train, populate memory, alternate E/M steps, select candidates.

    With ``eta == 1`` the EM phase is skipped entirely: the fused predictive
    collapses to the local head, so the pre-trained encoder is already the
    final model (the vanilla boundary).
    """
    start = time.perf_counter()
    model = MgmModel(graph, masks, encoder_config, config, seed=seed,
                     weighted=weighted)
    pre = pretrain(
        encoder_config, graph, masks,
        epochs=config.pretrain_epochs, patience=config.patience,
        lr=config.lr, weighted=weighted, rng=model.hub.stream("pretrain"),
    )
    model.initialize(pre)
    history = TrainHistory()

    if config.eta < 1.0 and config.em_iters > 0:
        from ..backbones import EarlyStopper

        e_opt = Adam(model.var_params(), lr=config.lr)
        m_opt = Adam(model.theta_params(), lr=config.lr)
        stopper = EarlyStopper(patience=config.patience, mode="max")
        noise_rng = model.hub.stream("em-noise")
        best = model.snapshot()
        best_f1 = -np.inf
        for it in range(config.em_iters):
            model.e_step(e_opt, rng=noise_rng)
            model.m_step(m_opt, rng=noise_rng)
            model.refresh_memory()

            value, terms = model.elbo()  # deterministic evaluation
            f1 = model.val_macro_f1()
            history.elbo.append(value.item())
            history.log_likelihood.append(terms["log_likelihood"])
            history.kl_dirichlet.append(terms["kl_dirichlet"])
            history.kl_gaussian.append(terms["kl_gaussian"])
            history.kl_multinomial.append(terms["kl_multinomial"])
            history.val_macro_f1.append(f1)

            track = f1 if np.isfinite(f1) else value.item()
            if track > best_f1 + 1e-12:
                best_f1 = track
                best = model.snapshot()
                history.best_iteration = it
            if stopper.update(track, it):
                history.stopped_at = it
                break
        model.restore(best)

    omega = model.var.expected_omega()
    model.memory_sampled = select_candidates(
        model.memory, omega, threshold=config.mass_threshold
    )
    minutes = (time.perf_counter() - start) / 60.0
    return TrainResult(model, model.memory, model.memory_sampled, history,
                       pre, minutes)


def predict(model: MgmModel, memory: MemoryBank, graph: Graph = None,
            nodes=None, eta=None) -> tuple:
    """Module-level prediction surface over a trained model and memory."""
    return model.predict(nodes=nodes, memory=memory, eta=eta)


# ---------------------------------------------------------------------------
# checkpoint container
# ---------------------------------------------------------------------------

def save_checkpoint(result: TrainResult, path):
    model = result.model
    obj = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "encoder_config": {
            "kind": model.encoder_config.kind,
            "hidden": model.encoder_config.hidden,
            "hops": model.encoder_config.hops,
            "activation": model.encoder_config.activation,
            "dropout": model.encoder_config.dropout,
        },
        "mgm_config": {
            "k": model.config.k,
            "eta": model.config.eta,
            "alpha": model.config.alpha if np.ndim(model.config.alpha) == 0
            else list(model.config.alpha),
            "sigma1_init": model.config.sigma1_init,
            "mc_samples": model.config.mc_samples,
            "em_iters": model.config.em_iters,
            "tau": model.config.tau,
            "inner_steps": model.config.inner_steps,
            "patience": model.config.patience,
            "lr": model.config.lr,
            "mass_threshold": model.config.mass_threshold,
            "merge_val": model.config.merge_val,
            "pretrain_epochs": model.config.pretrain_epochs,
        },
        "weighted": model.weighted,
        "seed": model.seed,
        "label_names": model.graph.label_names,
        "n_features": model.graph.n_features,
        "theta": {k: p.data.tolist() for k, p in model.theta.items()},
        "var": {k: p.data.tolist() for k, p in model.var.params.items()},
        "memory": model.memory.to_json_obj(),
        "memory_sampled": model.memory_sampled.to_json_obj()
        if model.memory_sampled is not None else None,
        "selected_indices": model.memory_sampled.node_indices.tolist()
        if model.memory_sampled is not None else [],
        "masks": {
            "train": np.nonzero(model.masks.train)[0].tolist(),
            "val": np.nonzero(model.masks.val)[0].tolist(),
            "test": np.nonzero(model.masks.test)[0].tolist(),
            "active_train": np.nonzero(model.masks.active_train)[0].tolist(),
            "label_fraction": model.masks.label_fraction,
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)


def load_checkpoint(path, graph: Graph) -> MgmModel:
    from ..graph.splits import SplitMasks

    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("format") != CHECKPOINT_FORMAT:
        raise ConfigError(f"{path}: not an MGM checkpoint")
    if obj.get("version") != CHECKPOINT_VERSION:
        raise ConfigError(f"{path}: unsupported checkpoint version")
    if obj["n_features"] != graph.n_features:
        raise ConfigError(
            f"checkpoint expects {obj['n_features']} features, graph has "
            f"{graph.n_features}"
        )
    if obj["label_names"] != graph.label_names:
        raise ConfigError("checkpoint label names disagree with the graph")

    enc_cfg = EncoderConfig(**obj["encoder_config"])
    mgm_cfg = MgmConfig(**obj["mgm_config"])

    def mask_from(idx):
        m = np.zeros(graph.n_nodes, dtype=bool)
        m[np.asarray(idx, dtype=int)] = True
        return m

    masks = SplitMasks(
        train=mask_from(obj["masks"]["train"]),
        val=mask_from(obj["masks"]["val"]),
        test=mask_from(obj["masks"]["test"]),
        label_fraction=obj["masks"]["label_fraction"],
        active_train=mask_from(obj["masks"]["active_train"]),
    )
    model = MgmModel(graph, masks, enc_cfg, mgm_cfg, seed=obj["seed"],
                     weighted=obj["weighted"])
    model.theta = {
        k: Tensor(np.asarray(v, dtype=np.float64), requires_grad=True)
        for k, v in obj["theta"].items()
    }
    model.memory = MemoryBank.from_json_obj(obj["memory"])
    alpha_vec = mgm_cfg.alpha_vector(model.memory.size)
    model.var = VariationalState(
        model.memory.size, enc_cfg.out_dim, graph.n_classes, alpha_vec,
        model.hub.stream("var-init"),
    )
    for k, v in obj["var"].items():
        model.var.params[k].data = np.asarray(v, dtype=np.float64)
    if obj["memory_sampled"] is not None:
        model.memory_sampled = MemoryBank.from_json_obj(obj["memory_sampled"])
    return model
