from .divergences import (
    GaussianDiag,
    dirichlet_log_density,
    kl_dirichlet,
    kl_gaussian,
    kl_multinomial,
    prior_z,
)
from .mgm import (
    MgmConfig,
    MgmModel,
    TrainResult,
    VariationalState,
    classify_global,
    classify_local,
    fuse_predictions,
    load_checkpoint,
    predict,
    save_checkpoint,
    similar_node_prior,
    train_em,
)

__all__ = [
    "GaussianDiag",
    "dirichlet_log_density",
    "kl_dirichlet",
    "kl_gaussian",
    "kl_multinomial",
    "prior_z",
    "MgmConfig",
    "MgmModel",
    "TrainResult",
    "VariationalState",
    "classify_global",
    "classify_local",
    "fuse_predictions",
    "load_checkpoint",
    "predict",
    "save_checkpoint",
    "similar_node_prior",
    "train_em",
]
