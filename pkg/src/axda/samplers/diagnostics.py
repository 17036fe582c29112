"""Chain diagnostics: effective sample size, Monte-Carlo TV, HPD thresholds."""

import numpy as np

from .._validation import check_probability
from ..exceptions import DomainError


def autocorrelation(series):
    """Empirical autocorrelation at every lag, via a zero-padded FFT."""
    x = np.asarray(series, dtype=float)
    n = x.shape[0]
    x = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    fx = np.fft.rfft(x, size)
    acov = np.fft.irfft(fx * np.conj(fx), size)[:n]
    return acov / acov[0]


def ess(series):
    """Effective sample size with Geyer's initial positive sequence truncation.

    A constant series has no defined autocorrelation; it returns 1.
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.shape[0]
    if n < 10:
        raise DomainError("ess needs at least 10 values")
    if np.ptp(x) == 0.0:
        return 1.0
    rho = autocorrelation(x)
    n_pairs = n // 2
    pairs = rho[: 2 * n_pairs : 2] + rho[1 : 2 * n_pairs : 2]
    nonpos = np.nonzero(pairs <= 0.0)[0]
    stop = nonpos[0] if nonpos.size else n_pairs
    tau = -1.0 + 2.0 * np.sum(pairs[:stop])
    return float(n / max(tau, 1e-12))


def mc_standard_error(values, use_ess=False):
    """Standard error of the sample mean, optionally ESS-corrected."""
    v = np.asarray(values, dtype=float)
    n = ess(v) if use_ess else v.shape[0]
    return float(np.std(v, ddof=1) / np.sqrt(n))


def estimate_tv_mc(log_pi, log_pi_rho, sampler_pi, n_samples, return_se=False):
    """One-sided Monte-Carlo estimate of the total variation distance.

    Uses ``TV = E_pi[max(0, 1 - pi_rho / pi)]`` with ``n_samples`` draws
    from ``sampler_pi(n)``. The log densities are evaluated on the whole
    batch of draws and must be normalized.
    """
    draws = sampler_pi(int(n_samples))
    diff = np.asarray(log_pi_rho(draws), dtype=float) - np.asarray(log_pi(draws), dtype=float)
    terms = np.where(diff >= 0.0, 0.0, -np.expm1(np.minimum(diff, 0.0)))
    est = float(np.mean(terms))
    if return_se:
        return est, float(np.std(terms, ddof=1) / np.sqrt(terms.shape[0]))
    return est


def hpd_threshold(potential_values, alpha):
    """Empirical ``(1 - alpha)``-quantile of potential values along a chain."""
    alpha = check_probability(alpha)
    v = np.asarray(potential_values, dtype=float).ravel()
    if v.size == 0:
        raise DomainError("potential_values is empty")
    return float(np.quantile(v, 1.0 - alpha))


def hpd_interval_grid(grid, density, alpha):
    """HPD set of a density tabulated on a uniform 1-D grid.

    Returns ``(lower, upper, mass, threshold)`` where the set is the
    superlevel set holding at least ``1 - alpha`` of the mass. The set is
    reported by its outer endpoints.
    """
    alpha = check_probability(alpha)
    grid = np.asarray(grid, dtype=float)
    p = np.asarray(density, dtype=float)
    step = grid[1] - grid[0]
    w = p * step
    w = w / w.sum()
    order = np.argsort(-p, kind="stable")
    cum = np.cumsum(w[order])
    k = int(np.searchsorted(cum, 1.0 - alpha))
    chosen = order[: k + 1]
    return float(grid[chosen.min()]), float(grid[chosen.max()]), float(cum[k]), float(p[order[k]])
