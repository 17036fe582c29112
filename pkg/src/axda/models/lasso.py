"""Generalized lasso: Gaussian likelihood with an l1 analysis prior ``tau ||B theta||_1``."""

from dataclasses import dataclass
import math

import numpy as np
from scipy import special, stats

from .._validation import check_positive
from ..bounds import coverage_interval
from ..exceptions import DomainError
from ..kernels import KernelFamily, SmoothingDensity
from ..samplers.diagnostics import hpd_interval_grid
from ..samplers.gibbs import Block, SplitModel


@dataclass
class LassoTarget:
    """Posterior ``exp(-||y - X theta||^2 / (2 sigma^2) - tau ||B theta||_1)``."""

    y: np.ndarray
    X: np.ndarray
    B: np.ndarray
    tau: float
    sigma: float

    def __post_init__(self):
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if self.X.shape[0] != self.y.shape[0]:
            raise DomainError("X must have one row per observation")
        if self.B.shape[1] != self.X.shape[1]:
            raise DomainError("B and X must act on the same dimension")
        if not self.tau >= 0:
            raise DomainError("tau must be non-negative")
        check_positive(self.sigma, "sigma")

    @property
    def dim(self):
        return self.X.shape[1]

    def prior_potential(self, theta):
        return self.tau * float(np.sum(np.abs(self.B @ theta)))

    def likelihood_potential(self, theta):
        r = self.y - self.X @ theta
        return float(r @ r) / (2.0 * self.sigma ** 2)

    def potential(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.likelihood_potential(theta) + self.prior_potential(theta)


def log_erfcx(x):
    """``log(exp(x^2) erfc(x))`` without overflow for either sign of ``x``."""
    x = np.asarray(x, dtype=float)
    pos = np.log(special.erfcx(np.maximum(x, 0.0)))
    neg = x * x + np.log(special.erfc(np.minimum(x, 0.0)))
    return np.where(x >= 0.0, pos, neg)


def smoothed_l1_terms(u, tau, rho):
    """Per-coordinate ``-log int exp(-tau |z|) N(z; u, rho^2) dz``."""
    u = np.asarray(u, dtype=float)
    s = math.sqrt(0.5) * rho
    b = s * (tau - u / rho ** 2)
    c = s * (tau + u / rho ** 2)
    log_a = 0.5 * math.log(math.pi * rho * rho / 2.0) - u * u / (2.0 * rho * rho)
    return 0.5 * math.log(2.0 * math.pi * rho * rho) - (log_a + np.logaddexp(log_erfcx(b), log_erfcx(c)))


def lasso_smoothed_potential(t, theta, rho):
    """Smoothed prior potential ``g_rho(theta)`` in closed form."""
    rho = check_positive(rho, "rho")
    return float(np.sum(smoothed_l1_terms(t.B @ np.asarray(theta, dtype=float), t.tau, rho)))


def _branches(mu, tau, rho):
    # mixture of two truncated Gaussians: z > 0 centred at mu - tau rho^2, z < 0 at mu + tau rho^2
    s = math.sqrt(0.5) * rho
    log_pos = log_erfcx(s * (tau - mu / rho ** 2))
    log_neg = log_erfcx(s * (tau + mu / rho ** 2))
    p_pos = np.exp(log_pos - np.logaddexp(log_pos, log_neg))
    return p_pos, mu - tau * rho ** 2, mu + tau * rho ** 2


def lasso_sample_z(mu, tau, rho, rng, size=None):
    """Exact draw from ``z ∝ exp(-tau |z| - (z - mu)^2 / (2 rho^2))``, elementwise in ``mu``."""
    mu = np.asarray(mu, dtype=float)
    shape = mu.shape if size is None else (size,) + mu.shape
    p_pos, m_pos, m_neg = _branches(mu, tau, rho)
    pick_pos = rng.random(shape) < p_pos
    # standardized truncation bounds of each branch
    a_pos = np.broadcast_to(-m_pos / rho, shape)
    b_neg = np.broadcast_to(-m_neg / rho, shape)
    draw_pos = stats.truncnorm.rvs(a_pos, np.inf, loc=np.broadcast_to(m_pos, shape), scale=rho,
                                   size=shape, random_state=rng)
    draw_neg = stats.truncnorm.rvs(-np.inf, b_neg, loc=np.broadcast_to(m_neg, shape), scale=rho,
                                   size=shape, random_state=rng)
    return np.where(pick_pos, draw_pos, draw_neg)


def _inverse_mills(x):
    """``phi(x) / (1 - Phi(x))`` evaluated stably for any ``x``."""
    return math.sqrt(2.0 / math.pi) / special.erfcx(np.asarray(x, dtype=float) / math.sqrt(2.0))


def lasso_conditional_mean(mu, tau, rho):
    mu = np.asarray(mu, dtype=float)
    p_pos, m_pos, m_neg = _branches(mu, tau, rho)
    e_pos = m_pos + rho * _inverse_mills(-m_pos / rho)
    e_neg = m_neg - rho * _inverse_mills(m_neg / rho)
    return p_pos * e_pos + (1.0 - p_pos) * e_neg


def soft_threshold(a, threshold):
    a = np.asarray(a, dtype=float)
    return np.sign(a) * np.maximum(np.abs(a) - threshold, 0.0)


def lasso_split_model(t, rho):
    """Split model with the l1 prior moved onto ``z = B theta`` plus Gaussian coupling."""
    rho = check_positive(rho, "rho")
    k = t.B.shape[0]
    tau = t.tau

    block = Block(
        operator=t.B,
        smoothing=SmoothingDensity(KernelFamily.GAUSSIAN, rho, k),
        sample_z=lambda a, z_prev, rng: lasso_sample_z(a, tau, rho, rng),
        potential=lambda z: tau * float(np.sum(np.abs(z))),
        minimize_z=lambda a, r: soft_threshold(a, tau * r * r),
        conditional_mean=lambda a: lasso_conditional_mean(a, tau, rho),
        sample_many=lambda a, n, rng: lasso_sample_z(a, tau, rho, rng, size=n),
    )
    s2 = t.sigma ** 2
    return SplitModel(
        blocks=[block],
        theta_dim=t.dim,
        theta_precision=t.X.T @ t.X / s2,
        theta_linear=t.X.T @ t.y / s2,
        potential=t.potential,
        name="lasso",
    )


def univariate_lasso(y=1.0, x=2.0, sigma=1.0, tau=1.0):
    return LassoTarget(y=[y], X=[[x]], B=[[1.0]], tau=tau, sigma=sigma)


def univariate_log_posterior(t, grid, rho=None):
    """Unnormalized log-posterior of a one-dimensional target on ``grid``.

    With ``rho`` given, the l1 prior is replaced by its smoothed version.
    """
    grid = np.asarray(grid, dtype=float)
    x, y, b = t.X[0, 0], t.y[0], t.B[0, 0]
    loglik = -((y - x * grid) ** 2) / (2.0 * t.sigma ** 2)
    if rho is None:
        return loglik - t.tau * np.abs(b * grid)
    return loglik - smoothed_l1_terms(b * grid, t.tau, rho)


def normalized_density(log_values, grid):
    step = grid[1] - grid[0]
    w = np.exp(log_values - np.max(log_values))
    return w / (np.sum(w) * step)


def credibility_table(t, rhos, alpha=0.05, grid=None, lipschitz=None):
    """HPD sets of the exact and smoothed posteriors of a one-dimensional target.

    For each ``rho`` returns a dict with the exact HPD endpoints, the smoothed
    HPD endpoints, the exact posterior mass of the smoothed HPD set and the
    theoretical coverage interval for ``lipschitz`` (``tau`` by default).
    """
    if grid is None:
        grid = np.arange(-6.0, 6.0 + 1e-4 / 2, 1e-4)
    lipschitz = t.tau * abs(t.B[0, 0]) if lipschitz is None else lipschitz
    p_exact = normalized_density(univariate_log_posterior(t, grid), grid)
    lo0, hi0, _, _ = hpd_interval_grid(grid, p_exact, alpha)
    step = grid[1] - grid[0]
    rows = []
    for rho in rhos:
        p_rho = normalized_density(univariate_log_posterior(t, grid, rho), grid)
        lo, hi, _, thr = hpd_interval_grid(grid, p_rho, alpha)
        inside = p_rho >= thr
        coverage = float(np.sum(p_exact[inside]) * step)
        c_lo, c_hi = coverage_interval(lipschitz, t.dim, rho, alpha)
        rows.append({
            "rho": float(rho), "exact_lo": lo0, "exact_hi": hi0,
            "hpd_lo": lo, "hpd_hi": hi, "coverage": coverage,
            "interval_lo": c_lo, "interval_hi": c_hi,
        })
    return rows
