"""Densities and closed-form KL divergences used by the evidence bound.

All functions accept Tensors or arrays and return Tensors, so the same
formulas serve both direct evaluation and gradient-based training.
"""

import numpy as np

from ..diff import (
    Tensor,
    astensor,
    digamma,
    gammaln,
    log,
    mul,
    sqrt,
    square,
    sub,
    tsum,
    xlogy,
)
from ..errors import DomainError, PreconditionError, TrainingError


def _broadcast_alpha(alpha, n) -> Tensor:
    alpha = astensor(alpha)
    if alpha.data.ndim == 0:
        return Tensor(np.full(n, float(alpha.data)))
    if alpha.data.shape != (n,):
        raise PreconditionError(
            f"alpha must be scalar or length {n}, got shape {alpha.data.shape}"
        )
    return alpha


def dirichlet_log_density(omega, alpha) -> Tensor:
    """log Dir(omega; alpha) including the normalizing constant."""
    omega = astensor(omega)
    n = omega.data.shape[0]
    alpha = _broadcast_alpha(alpha, n)
    if (alpha.data <= 0).any():
        raise PreconditionError("alpha must be strictly positive")
    if abs(omega.data.sum() - 1.0) > 1e-6 or (omega.data < -1e-12).any():
        raise DomainError("omega must lie on the probability simplex")
    log_norm = gammaln(tsum(alpha)) - tsum(gammaln(alpha))
    return log_norm + tsum(xlogy(sub(alpha, 1.0), omega))


def kl_dirichlet(lam, alpha) -> Tensor:
    """KL( Dir(lam) || Dir(alpha) ), closed form via log-gamma and digamma."""
    lam = astensor(lam)
    n = lam.data.shape[0]
    alpha = _broadcast_alpha(alpha, n)
    if (lam.data <= 0).any() or (alpha.data <= 0).any():
        raise PreconditionError("Dirichlet parameters must be strictly positive")
    lam_sum = tsum(lam)
    term = gammaln(lam_sum) - tsum(gammaln(lam))
    term = term - gammaln(tsum(alpha)) + tsum(gammaln(alpha))
    centred = sub(digamma(lam), digamma(lam_sum))
    return term + tsum(mul(sub(lam, alpha), centred))


def kl_gaussian(q_mean, q_var, p_mean, p_var) -> Tensor:
    """KL between diagonal Gaussians, summed over all coordinates.

    Variances broadcast against the means, so scalar, per-row, and per-entry
    parameterizations all work.
    """
    q_mean, p_mean = astensor(q_mean), astensor(p_mean)
    q_var, p_var = astensor(q_var), astensor(p_var)
    if (q_var.data <= 0).any() or (p_var.data <= 0).any():
        raise PreconditionError("variances must be strictly positive")
    shape = np.broadcast_shapes(q_mean.data.shape, p_mean.data.shape)
    ones = Tensor(np.ones(shape))
    log_ratio = sub(mul(ones, log(p_var)), mul(ones, log(q_var)))
    quad = (mul(ones, q_var) + square(sub(q_mean, p_mean))) / p_var
    return mul(tsum(log_ratio + quad - ones), 0.5)


def kl_multinomial(q_probs, p_probs, k) -> Tensor:
    """KL between multinomials with the same count K: K * sum q ln(q/p).

    Zero-probability q entries contribute nothing; q > 0 where p = 0 is an
    unbounded divergence and raises.
    """
    q_probs, p_probs = astensor(q_probs), astensor(p_probs)
    if k < 1:
        raise PreconditionError("count parameter K must be >= 1")
    q, p = q_probs.data, p_probs.data
    if (q < -1e-12).any() or (p < -1e-12).any():
        raise PreconditionError("probability vectors must be non-negative")
    if np.abs(q.sum(axis=-1) - 1.0).max() > 1e-6 or np.abs(p.sum(axis=-1) - 1.0).max() > 1e-6:
        raise PreconditionError("probability vectors must sum to 1")
    if ((q > 0) & (p == 0)).any():
        raise TrainingError("kl_multinomial: q places mass where p is zero")
    return mul(tsum(xlogy(q_probs, q_probs)) - tsum(xlogy(q_probs, p_probs)), float(k))


class GaussianDiag:
    """Diagonal Gaussian with mean Tensor and broadcastable variance Tensor."""

    def __init__(self, mean, var):
        self.mean = astensor(mean)
        self.var = astensor(var)
        if (self.var.data <= 0).any():
            raise PreconditionError("variance must be strictly positive")

    def sample(self, noise=None, rng=None) -> Tensor:
        """Reparameterized draw mean + sqrt(var) * eps; eps=0 returns the mean."""
        if noise is None:
            if rng is None:
                noise = np.zeros(self.mean.data.shape)
            else:
                noise = rng.standard_normal(self.mean.data.shape)
        if not np.any(noise):
            return self.mean + mul(sqrt(self.var), 0.0)
        return self.mean + mul(sqrt(self.var), Tensor(noise))

    def log_density(self, x) -> Tensor:
        x = astensor(x)
        ones = Tensor(np.ones(self.mean.data.shape))
        quad = square(sub(x, self.mean)) / self.var
        log_det = mul(ones, log(self.var))
        const = np.log(2.0 * np.pi)
        return mul(tsum(quad + log_det + mul(ones, const)), -0.5)


def prior_z(encoder_out, sigma_sq) -> GaussianDiag:
    """Gaussian prior over embeddings: mean from the encoder, shared variance."""
    return GaussianDiag(encoder_out, sigma_sq)
