import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, linalg, stats

from axda.exceptions import BlockSamplingError, ConvergenceError, DomainError, NumericError
from axda.kernels import KernelFamily, SmoothingDensity
from axda.models.gaussian import GaussianTarget, gaussian_split_model
from axda.models.inpainting import gradient_matrix
from axda.samplers import (
    Block,
    SplitModel,
    ess,
    estimate_tv_mc,
    hpd_interval_grid,
    hpd_threshold,
    mc_standard_error,
    run_split_gibbs,
    sample_gaussian_circulant_fft,
    sample_gaussian_precision,
    sample_inverse_gaussian,
    sample_log_concave_1d,
    stream,
)


# ---------------------------------------------------------------- inverse Gaussian

def test_inverse_gaussian_ks():
    rng = np.random.default_rng(1)
    mu, lam = 2.0, 3.0
    draws = sample_inverse_gaussian(mu, lam, rng, size=100_000)
    assert stats.kstest(draws, stats.invgauss(mu / lam, scale=lam).cdf).pvalue > 0.01


def test_inverse_gaussian_moments():
    rng = np.random.default_rng(2)
    mu, lam, n = 2.0, 3.0, 1_000_000
    draws = sample_inverse_gaussian(mu, lam, rng, size=n)
    var = mu ** 3 / lam
    assert abs(draws.mean() - mu) < 3 * math.sqrt(var / n)
    # fourth central moment of IG: 15 mu^7 / lam^3 + 3 var^2
    m4 = 15 * mu ** 7 / lam ** 3 + 3 * var ** 2
    assert abs(draws.var() - var) < 4 * math.sqrt((m4 - var ** 2) / n)


def test_inverse_gaussian_extreme_ratio():
    rng = np.random.default_rng(3)
    draws = sample_inverse_gaussian(1e6, 1e-3, rng, size=10_000)
    assert np.all(np.isfinite(draws)) and np.all(draws > 0)
    assert stats.kstest(draws, stats.invgauss(1e9, scale=1e-3).cdf).pvalue > 0.01


def test_inverse_gaussian_domain():
    rng = np.random.default_rng(0)
    for mu, lam in [(0.0, 1.0), (1.0, -1.0), (np.inf, 1.0), (np.nan, 1.0)]:
        with pytest.raises(DomainError):
            sample_inverse_gaussian(mu, lam, rng)


# ---------------------------------------------------------------- adaptive rejection

def test_ars_standard_normal_ks():
    rng = np.random.default_rng(4)
    draws = [sample_log_concave_1d(lambda x: 0.5 * x * x, 0.3, rng) for _ in range(5000)]
    assert stats.kstest(draws, stats.norm.cdf).pvalue > 0.01


def test_ars_gamma_with_gradient():
    rng = np.random.default_rng(5)
    a = 3.0
    f = lambda x: x - (a - 1) * math.log(x) if x > 0 else math.inf
    g = lambda x: 1 - (a - 1) / x
    draws = [sample_log_concave_1d(f, 2.0, rng, grad=g, scale=0.5) for _ in range(5000)]
    assert stats.kstest(draws, stats.gamma(a).cdf).pvalue > 0.01


def _logistic_conditional_mean_quadrature(y, a, rho):
    w = lambda z: math.exp(-np.logaddexp(0.0, y * z) - (z - a) ** 2 / (2 * rho * rho))
    num = integrate.quad(lambda z: z * w(z), -np.inf, np.inf)[0]
    den = integrate.quad(w, -np.inf, np.inf)[0]
    return num / den


def test_ars_logistic_conditional():
    rng = np.random.default_rng(6)
    y, a, rho = 1.0, 0.0, 1.0
    f = lambda z: np.logaddexp(0.0, y * z) + (z - a) ** 2 / (2 * rho * rho)
    draws = np.array([sample_log_concave_1d(f, 0.0, rng) for _ in range(20_000)])
    oracle = _logistic_conditional_mean_quadrature(y, a, rho)
    assert draws.mean() < 0
    assert abs(draws.mean() - oracle) < 3 * draws.std() / math.sqrt(draws.size)


def test_ars_rejects_non_log_concave_input():
    rng = np.random.default_rng(7)
    with pytest.raises(ConvergenceError):
        sample_log_concave_1d(lambda x: -x, 0.0, rng)
    with pytest.raises(ConvergenceError):
        sample_log_concave_1d(lambda x: math.inf, 0.0, rng)


# ---------------------------------------------------------------- Gaussian samplers

def test_precision_sampler_standard_normal():
    rng = np.random.default_rng(8)
    draws = sample_gaussian_precision(np.eye(3), np.zeros(3), rng, size=100_000)
    assert np.all(np.abs(draws.mean(axis=0)) < 3 / math.sqrt(1e5))
    assert np.allclose(np.cov(draws.T), np.eye(3), atol=0.02)


def test_precision_sampler_general():
    rng = np.random.default_rng(9)
    a = rng.normal(size=(3, 3))
    q = a @ a.T + np.eye(3)
    b = rng.normal(size=3)
    draws = sample_gaussian_precision(q, b, rng, size=200_000)
    cov = np.linalg.inv(q)
    assert np.allclose(draws.mean(axis=0), cov @ b, atol=4 * math.sqrt(cov.max() / 2e5))
    assert np.allclose(np.cov(draws.T), cov, atol=0.01)
    single = sample_gaussian_precision(q, b, rng)
    assert single.shape == (3,)


def test_precision_sampler_not_pd():
    with pytest.raises(NumericError):
        sample_gaussian_precision(np.diag([1.0, -1.0]), np.zeros(2), np.random.default_rng(0))


def test_circulant_mean_and_covariance_vs_dense():
    rng = np.random.default_rng(10)
    shape, eta, rho = (4, 5), 0.3, 0.7
    d = gradient_matrix(shape)
    q = np.eye(20) / eta + d.T @ d / rho ** 2
    b = rng.normal(size=20)
    draw, mean = sample_gaussian_circulant_fft(shape, eta, rho, b, rng, return_mean=True)
    assert np.allclose(mean, np.linalg.solve(q, b), atol=1e-12)
    draws = np.array([sample_gaussian_circulant_fft(shape, eta, rho, b, rng) for _ in range(40_000)])
    assert np.allclose(np.cov(draws.T), np.linalg.inv(q), atol=0.01)


def test_circulant_large_rho_limit():
    rng = np.random.default_rng(11)
    b = np.full(9, 2.0)
    _, mean = sample_gaussian_circulant_fft((3, 3), 0.5, np.inf, b, rng, return_mean=True)
    assert np.allclose(mean, 0.5 * b, atol=1e-14)
    draws = np.array([sample_gaussian_circulant_fft((3, 3), 0.5, 1e8, b, rng) for _ in range(20_000)])
    assert np.allclose(draws.var(axis=0), 0.5, atol=0.04)


def test_circulant_domain():
    with pytest.raises(DomainError):
        sample_gaussian_circulant_fft((2, 2), 0.0, 1.0, np.zeros(4), np.random.default_rng(0))


# ---------------------------------------------------------------- Gibbs

def test_gibbs_gaussian_exactness():
    t = GaussianTarget([0.5], [[1.0]])
    rho = 0.3
    chain = run_split_gibbs(gaussian_split_model(t, rho), 100_000, burnin=1000, seed=1, store_z=True)
    theta = chain.samples[:, 0]
    z = np.array([zz[0][0] for zz in chain.z_samples])
    n_eff_t, n_eff_z = ess(theta), ess(z)
    # theta ~ N(0.5, 1 + rho^2) and z ~ N(0.5, 1)
    var_t = 1 + rho ** 2
    assert abs(theta.mean() - 0.5) < 3 * math.sqrt(var_t / n_eff_t)
    assert abs(theta.var() - var_t) < 3 * var_t * math.sqrt(2 / n_eff_t)
    assert abs(z.mean() - 0.5) < 3 * math.sqrt(1 / n_eff_z)
    assert abs(z.var() - 1.0) < 3 * math.sqrt(2 / n_eff_z)


def test_stored_sample_count():
    t = GaussianTarget([0.0], [[1.0]])
    chain = run_split_gibbs(gaussian_split_model(t, 0.5), 100, burnin=20, thinning=4)
    assert chain.samples.shape == ((100 - 20) // 4, 1)
    assert chain.potential_trace.shape == (100,)
    default = run_split_gibbs(gaussian_split_model(t, 0.5), 50)
    assert default.burnin == 25 and default.samples.shape[0] == 25


def test_gibbs_bad_arguments():
    t = GaussianTarget([0.0], [[1.0]])
    with pytest.raises(DomainError):
        run_split_gibbs(gaussian_split_model(t, 0.5), 10, burnin=10)
    with pytest.raises(DomainError):
        SplitModel(blocks=[], theta_dim=1)
    with pytest.raises(DomainError):
        Block(operator=np.eye(2), smoothing=SmoothingDensity("Gaussian", 1.0, 3))


def _two_block_model(prior_prec=1.0):
    """theta ~ N(0, 1/prior_prec); z_j | theta ~ N(a_j theta, rho_j^2); f_j(z) = (z - y_j)^2 / 2."""
    ys = [1.0, -0.5]
    rhos = [0.4, 0.8]
    ops = [np.array([[1.0]]), np.array([[2.0]])]
    blocks = []
    for y, r, op in zip(ys, rhos, ops):
        def sample_z(a, z_prev, rng, y=y, r=r):
            prec = 1 + 1 / r ** 2
            return np.array([(y + a[0] / r ** 2) / prec + rng.standard_normal() / math.sqrt(prec)])
        blocks.append(Block(op, SmoothingDensity("Gaussian", r, 1), sample_z=sample_z,
                            potential=lambda z, y=y: 0.5 * float((z[0] - y) ** 2)))
    return SplitModel(blocks, 1, theta_precision=np.array([[prior_prec]])), ys, rhos, ops


def test_two_block_conjugate_marginal():
    model, ys, rhos, ops = _two_block_model()
    chain = run_split_gibbs(model, 60_000, burnin=2000, seed=3)
    # marginally y_j | theta ~ N(a_j theta, 1 + rho_j^2); posterior is conjugate
    prec = 1.0 + sum(op[0, 0] ** 2 / (1 + r ** 2) for op, r in zip(ops, rhos))
    mean = sum(op[0, 0] * y / (1 + r ** 2) for op, y, r in zip(ops, ys, rhos)) / prec
    x = chain.samples[:, 0]
    n_eff = ess(x)
    assert abs(x.mean() - mean) < 3 * math.sqrt(1 / prec / n_eff)
    assert abs(x.var() - 1 / prec) < 3 * (1 / prec) * math.sqrt(2 / n_eff)


def test_determinism_serial_parallel():
    model, *_ = _two_block_model()
    a = run_split_gibbs(model, 500, seed=17)
    b = run_split_gibbs(model, 500, seed=17, parallel_blocks=True)
    c = run_split_gibbs(model, 500, seed=18)
    assert a.samples.tobytes() == b.samples.tobytes()
    assert a.potential_trace.tobytes() == b.potential_trace.tobytes()
    assert a.samples.tobytes() != c.samples.tobytes()


def test_streams_are_distinct():
    x = [stream(5, t, s).random() for t in range(3) for s in range(3)]
    assert len(set(x)) == 9
    assert stream(5, 2, 1).random() == stream(5, 2, 1).random()


def test_block_error_carries_location():
    def broken(a, z_prev, rng):
        raise ValueError("boom")

    blk = Block(np.eye(1), SmoothingDensity("Gaussian", 1.0, 1), sample_z=broken)
    model = SplitModel([blk], 1, theta_precision=np.eye(1))
    with pytest.raises(BlockSamplingError) as info:
        run_split_gibbs(model, 5)
    assert info.value.block == 0 and info.value.iteration == 0


def test_smoothed_gaussian_log_concave():
    # convolution of N(0, 1) with a Laplace kernel; second differences of the log stay <= 0
    rho = 0.5
    grid = np.linspace(-4, 4, 41)
    dens = [integrate.quad(lambda u: stats.norm.pdf(x - u) * stats.laplace(scale=rho).pdf(u),
                           -np.inf, np.inf)[0] for x in grid]
    assert np.all(np.diff(np.log(dens), 2) <= 1e-12)


def test_kernel_smoothing_mean_and_variance():
    # pi_rho of a mean-zero kernel keeps the mean and adds the kernel variance
    rng = np.random.default_rng(12)
    rho, n = 0.6, 400_000
    theta = rng.gamma(2.0, 1.0, n)
    sd = SmoothingDensity(KernelFamily.LAPLACE, rho, 1)
    from axda.kernels import sample_kappa
    z = theta + np.array([sample_kappa(sd, [0.0], rng)[0] for _ in range(n)])
    assert abs(z.mean() - 2.0) < 4 * z.std() / math.sqrt(n)
    assert abs(z.var() - (2.0 + 2 * rho ** 2)) < 0.05


# ---------------------------------------------------------------- diagnostics

def test_ess_iid():
    x = np.random.default_rng(13).standard_normal(10_000)
    assert 9000 <= ess(x) <= 11000


def test_ess_ar1():
    rng = np.random.default_rng(14)
    n, phi = 100_000, 0.5
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0]
    for i in range(1, n):
        x[i] = phi * x[i - 1] + e[i]
    assert ess(x) == pytest.approx(n * (1 - phi) / (1 + phi), rel=0.1)


def test_ess_conventions():
    assert ess(np.ones(50)) == 1.0
    with pytest.raises(DomainError):
        ess(np.arange(5.0))


def test_mc_standard_error():
    x = np.random.default_rng(15).standard_normal(10_000)
    assert mc_standard_error(x) == pytest.approx(x.std(ddof=1) / 100)
    assert mc_standard_error(x, use_ess=True) == pytest.approx(x.std(ddof=1) / math.sqrt(ess(x)))


def test_tv_mc_identical_densities():
    rng = np.random.default_rng(16)
    lp = lambda x: stats.norm.logpdf(x)
    assert estimate_tv_mc(lp, lp, lambda n: rng.standard_normal(n), 1000) == 0.0


def test_tv_mc_against_closed_form():
    # TV(N(0,1), N(1,1)) = 2 Phi(1/2) - 1
    rng = np.random.default_rng(17)
    est, se = estimate_tv_mc(stats.norm.logpdf, lambda x: stats.norm.logpdf(x, 1.0),
                             lambda n: rng.standard_normal(n), 200_000, return_se=True)
    assert abs(est - (2 * stats.norm.cdf(0.5) - 1)) < 4 * se


def test_hpd_threshold_chi_square():
    x = np.random.default_rng(18).standard_normal(200_000)
    gamma = hpd_threshold(0.5 * x * x, 0.05)
    assert gamma == pytest.approx(0.5 * 1.959963984540054 ** 2, rel=0.02)
    v = np.array([3.0, 1.0, 2.0, 5.0, 4.0])
    assert hpd_threshold(v, 1 - 1e-12) == pytest.approx(1.0, abs=1e-9)
    assert hpd_threshold(v, 0.5) == 3.0


def test_hpd_interval_grid_normal():
    grid = np.arange(-6, 6, 1e-4)
    lo, hi, mass, _ = hpd_interval_grid(grid, stats.norm.pdf(grid), 0.05)
    assert lo == pytest.approx(-1.96, abs=2e-4) and hi == pytest.approx(1.96, abs=2e-4)
    assert mass == pytest.approx(0.95, abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50), st.floats(0.001, 0.999))
def test_hpd_threshold_within_range(values, alpha):
    g = hpd_threshold(values, alpha)
    assert min(values) <= g <= max(values)
