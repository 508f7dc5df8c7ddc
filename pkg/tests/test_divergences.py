import numpy as np
import pytest
from scipy import stats

from mgm.diff import Tensor
from mgm.diff.gradcheck import check_gradient
from mgm.errors import DomainError, PreconditionError, TrainingError
from mgm.model import (
    GaussianDiag,
    dirichlet_log_density,
    kl_dirichlet,
    kl_gaussian,
    kl_multinomial,
    prior_z,
)


def test_uniform_dirichlet_density_is_log_two():
    for omega in ([0.2, 0.3, 0.5], [1 / 3, 1 / 3, 1 / 3], [0.9, 0.05, 0.05]):
        v = dirichlet_log_density(np.asarray(omega), np.ones(3)).item()
        assert abs(v - np.log(2.0)) < 1e-12


def test_dirichlet_density_matches_scipy():
    omega = np.array([0.5, 0.5])
    alpha = np.array([0.1, 0.1])
    ours = dirichlet_log_density(omega, alpha).item()
    ref = stats.dirichlet.logpdf(omega, alpha)
    assert abs(ours - ref) < 1e-10
    # scalar alpha broadcast
    ours_b = dirichlet_log_density(omega, 0.1).item()
    assert abs(ours_b - ref) < 1e-10


def test_dirichlet_density_off_simplex():
    with pytest.raises(DomainError):
        dirichlet_log_density(np.array([0.6, 0.6]), 1.0)


def test_kl_dirichlet_zero_at_equality():
    lam = np.array([0.4, 1.2, 2.0])
    assert abs(kl_dirichlet(lam, lam.copy()).item()) < 1e-12


def test_kl_dirichlet_monte_carlo():
    rng = np.random.default_rng(0)
    lam = np.array([2.0, 2.0])
    alpha = np.array([1.0, 1.0])
    closed = kl_dirichlet(lam, alpha).item()
    draws = rng.dirichlet(lam, size=1_000_000)
    mc = np.mean(
        stats.dirichlet.logpdf(draws.T, lam) - stats.dirichlet.logpdf(draws.T, alpha)
    )
    assert abs(closed - mc) / abs(mc) < 0.01


def test_kl_dirichlet_positive_off_equality():
    rng = np.random.default_rng(1)
    for _ in range(20):
        lam = rng.uniform(0.2, 3.0, size=4)
        alpha = rng.uniform(0.2, 3.0, size=4)
        if np.allclose(lam, alpha):
            continue
        assert kl_dirichlet(lam, alpha).item() > 0.0


def test_kl_dirichlet_gradient():
    rng = np.random.default_rng(2)
    lam0 = rng.uniform(0.5, 2.0, size=5)
    alpha = Tensor(np.full(5, 0.1))
    assert check_gradient(lambda t: kl_dirichlet(t, alpha), lam0) < 1e-4


def test_kl_gaussian_zero_and_hand_case():
    m = np.zeros((2, 3))
    assert abs(kl_gaussian(m, 1.0, m, 1.0).item()) < 1e-15
    v = kl_gaussian(np.array([[1.0]]), 1.0, np.array([[0.0]]), 1.0).item()
    assert abs(v - 0.5) < 1e-12


def test_kl_gaussian_monte_carlo_5d():
    rng = np.random.default_rng(3)
    for _ in range(3):
        qm = rng.normal(size=5)
        pm = rng.normal(size=5)
        qv = rng.uniform(0.5, 2.0)
        pv = rng.uniform(0.5, 2.0)
        closed = kl_gaussian(qm[None], qv, pm[None], pv).item()
        x = qm + np.sqrt(qv) * rng.standard_normal((1_000_000, 5))
        logq = stats.norm.logpdf(x, qm, np.sqrt(qv)).sum(axis=1)
        logp = stats.norm.logpdf(x, pm, np.sqrt(pv)).sum(axis=1)
        mc = float(np.mean(logq - logp))
        assert abs(closed - mc) / abs(mc) < 0.01


def test_kl_gaussian_gradient():
    rng = np.random.default_rng(4)
    qm0 = rng.normal(size=(3, 2))
    pm = Tensor(rng.normal(size=(3, 2)))
    assert check_gradient(lambda t: kl_gaussian(t, 0.7, pm, 1.3), qm0) < 1e-4


def test_kl_multinomial_zero_and_k_scaling():
    q = np.array([0.3, 0.7])
    assert abs(kl_multinomial(q, q.copy(), 4).item()) < 1e-15
    cat = kl_multinomial(q, np.array([0.5, 0.5]), 1).item()
    k3 = kl_multinomial(q, np.array([0.5, 0.5]), 3).item()
    assert abs(k3 - 3 * cat) < 1e-12


def test_kl_multinomial_hand_value():
    v = kl_multinomial(np.array([0.7, 0.3]), np.array([0.5, 0.5]), 3).item()
    assert abs(v - 0.24684) < 5e-5


def test_kl_multinomial_zero_q_entries():
    v = kl_multinomial(np.array([0.0, 1.0]), np.array([0.5, 0.5]), 2).item()
    assert abs(v - 2 * np.log(2.0)) < 1e-12


def test_kl_multinomial_unbounded_support_mismatch():
    with pytest.raises(TrainingError):
        kl_multinomial(np.array([0.5, 0.5]), np.array([1.0, 0.0]), 2)


def test_kl_multinomial_monte_carlo():
    rng = np.random.default_rng(5)
    q = np.array([0.2, 0.5, 0.3])
    p = np.array([0.4, 0.4, 0.2])
    k = 4
    closed = kl_multinomial(q, p, k).item()
    draws = rng.multinomial(k, q, size=1_000_000)
    # factorial terms cancel in the log ratio
    mc = float(np.mean(draws @ (np.log(q) - np.log(p))))
    assert abs(closed - mc) / abs(mc) < 0.01


def test_prior_z_zero_noise_returns_mean():
    mean = np.array([[1.0, -2.0], [0.5, 3.0]])
    dist = prior_z(Tensor(mean), Tensor(np.array(2.0)))
    np.testing.assert_array_equal(dist.sample().data, mean)


def test_prior_z_mean_log_density_closed_form():
    rng = np.random.default_rng(6)
    mean = rng.normal(size=(4, 3))
    s2 = 1.7
    dist = prior_z(Tensor(mean), Tensor(np.array(s2)))
    got = dist.log_density(Tensor(mean)).item()
    expected = -(mean.size / 2.0) * np.log(2 * np.pi * s2)
    assert abs(got - expected) < 1e-10


def test_prior_z_sampling_statistics():
    rng = np.random.default_rng(7)
    mean = np.zeros((1, 1))
    dist = GaussianDiag(Tensor(mean), Tensor(np.array(4.0)))
    draws = np.array([dist.sample(rng=rng).item() for _ in range(4000)])
    assert abs(draws.std() - 2.0) < 0.1


def test_variance_preconditions():
    with pytest.raises(PreconditionError):
        GaussianDiag(Tensor(np.zeros(2)), Tensor(np.array(-1.0)))
    with pytest.raises(PreconditionError):
        kl_gaussian(np.zeros(2), -1.0, np.zeros(2), 1.0)
    with pytest.raises(PreconditionError):
        kl_dirichlet(np.array([0.5, -0.1]), 0.1)
