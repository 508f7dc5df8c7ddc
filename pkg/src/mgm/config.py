"""Run configuration: a flat JSON key set with flag and environment overrides.

Precedence is flag > MGM_SEED environment variable > config file > defaults.
Every command echoes its resolved configuration into the output directory;
re-running from the echo reproduces the run bit for bit.
"""

import json
import os
from dataclasses import asdict, dataclass, field

from .backbones import DEFAULT_CONFIGS, EncoderConfig
from .errors import ConfigError
from .model import MgmConfig

ENV_SEED = "MGM_SEED"


@dataclass
class RunConfig:
    task: str = "fact"
    nodes: str | None = None
    edges: str | None = None
    labels: str | None = None
    label_names: list = field(default_factory=lambda: ["low", "mixed", "high"])

    synth_n_nodes: int | None = None
    synth_components: int = 8
    synth_classes: int = 3
    synth_homophily: float = 0.8
    synth_label_fraction: float = 0.02
    synth_noise: float = 2.0
    synth_seed: int = 0

    encoder: str = "gcn"
    hidden: list | None = None
    hops: int = 2
    activation: str | None = None
    dropout: float = 0.0

    k: int = 3
    eta: float = 0.8
    alpha: float = 0.1
    tau: float = 1.0
    mc_samples: int = 1
    em_iters: int = 50
    inner_steps: int = 5
    patience: int = 10
    lr: float = 0.001
    pretrain_epochs: int = 300

    split_ratios: list = field(default_factory=lambda: [0.7, 0.1, 0.2])
    label_fraction: float = 1.0
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    memory_mode: str = "sampled"
    mass: float = 0.90
    edge_weights: str = "weighted"
    vanilla: bool = False
    merge_val: bool = True
    figures: bool = True
    out: str = "runs/out"

    def validate(self):
        if not self.seeds:
            raise ConfigError("seed list must be nonempty")
        if self.memory_mode not in ("full", "sampled"):
            raise ConfigError("memory_mode must be 'full' or 'sampled'")
        if self.edge_weights not in ("weighted", "binary"):
            raise ConfigError("edge_weights must be 'weighted' or 'binary'")
        if self.uses_files():
            for name in ("nodes", "edges", "labels"):
                path = getattr(self, name)
                if path is None:
                    raise ConfigError(f"config needs a {name} path or synth_n_nodes")
                if not os.path.exists(path):
                    raise ConfigError(f"{name} file does not exist: {path}")
        elif self.synth_n_nodes is None:
            raise ConfigError("config needs data paths or synth_n_nodes")
        if len(self.split_ratios) != 3:
            raise ConfigError("split_ratios must have three entries")
        return self

    def uses_files(self) -> bool:
        return self.nodes is not None or self.synth_n_nodes is None

    @property
    def weighted(self) -> bool:
        return self.edge_weights == "weighted"

    def encoder_config(self) -> EncoderConfig:
        base = dict(DEFAULT_CONFIGS[self.encoder]) if self.encoder in DEFAULT_CONFIGS \
            else {}
        if not base:
            raise ConfigError(f"unknown encoder {self.encoder!r}")
        hidden = self.hidden if self.hidden is not None else base["hidden"]
        activation = self.activation if self.activation is not None \
            else base["activation"]
        return EncoderConfig(
            kind=self.encoder, hidden=list(hidden),
            hops=self.hops if self.encoder == "sgc" else 2,
            activation=activation, dropout=self.dropout,
        )

    def mgm_config(self) -> MgmConfig:
        return MgmConfig(
            k=self.k,
            eta=1.0 if self.vanilla else self.eta,
            alpha=self.alpha,
            mc_samples=self.mc_samples,
            em_iters=self.em_iters,
            tau=self.tau,
            inner_steps=self.inner_steps,
            patience=self.patience,
            lr=self.lr,
            mass_threshold=self.mass,
            merge_val=self.merge_val,
            pretrain_epochs=self.pretrain_epochs,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def echo(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "config.echo.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
        return path


def resolve_config(file_path=None, overrides=None, env=None) -> RunConfig:
    """Merge file, environment, and flag values into a validated RunConfig."""
    env = os.environ if env is None else env
    data = {}
    if file_path is not None:
        if not os.path.exists(file_path):
            raise ConfigError(f"config file does not exist: {file_path}")
        with open(file_path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{file_path}: invalid JSON ({e})") from None
        unknown = set(data) - set(RunConfig.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    if ENV_SEED in env:
        try:
            data["seeds"] = [int(s) for s in str(env[ENV_SEED]).split(",") if s]
        except ValueError:
            raise ConfigError(f"{ENV_SEED} must be a comma-separated integer list")

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in RunConfig.__dataclass_fields__:
            raise ConfigError(f"unknown config key {key!r}")
        data[key] = value

    return RunConfig(**data).validate()
