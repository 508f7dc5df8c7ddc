"""Central finite-difference gradient checking.

This is the independent oracle for every differentiable kernel: the
reverse-mode gradient of a scalar-valued function is compared against
symmetric differences with step 1e-5.
"""

import numpy as np

from .tensor import Tensor


def numeric_grad(fn, x: np.ndarray, step=1e-5) -> np.ndarray:
    """Central differences of ``fn`` (ndarray -> float) at ``x``."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.ravel()
    gflat = g.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = fn(x)
        flat[i] = orig - step
        lo = fn(x)
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * step)
    return g


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / denom))


def check_gradient(build, x0: np.ndarray, step=1e-5) -> float:
    """Return the max relative error between tape and numeric gradients.

    ``build`` maps a Tensor leaf to a scalar Tensor; it is re-invoked for
    every finite-difference probe so the forward pass is honest each time.
    """
    leaf = Tensor(np.array(x0, dtype=np.float64), requires_grad=True)
    out = build(leaf)
    out.backward()
    analytic = leaf.grad.copy()

    def f(arr):
        return build(Tensor(arr)).item()

    numeric = numeric_grad(f, np.array(x0, dtype=np.float64), step=step)
    return max_rel_error(analytic, numeric)
