from .adam import Adam
from .sparse import SparseMatrix, spmm
from .tensor import (
    Tensor,
    add,
    astensor,
    backward,
    concat,
    digamma,
    div,
    dropout,
    elu,
    exp,
    gammaln,
    log,
    log_softmax,
    masked_softmax,
    matmul,
    mean,
    mul,
    relu,
    slice_cols,
    softmax,
    softmax_cross_entropy,
    softplus,
    sqrt,
    square,
    sub,
    take_rows,
    transpose,
    tsum,
    xlogy,
)

__all__ = [
    "Adam",
    "SparseMatrix",
    "spmm",
    "Tensor",
    "add",
    "astensor",
    "backward",
    "concat",
    "digamma",
    "div",
    "dropout",
    "elu",
    "exp",
    "gammaln",
    "log",
    "log_softmax",
    "masked_softmax",
    "matmul",
    "mean",
    "mul",
    "relu",
    "slice_cols",
    "softmax",
    "softmax_cross_entropy",
    "softplus",
    "sqrt",
    "square",
    "sub",
    "take_rows",
    "transpose",
    "tsum",
    "xlogy",
]
