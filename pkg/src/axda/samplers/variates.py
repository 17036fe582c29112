"""Random-variate generators used by the Gibbs conditionals."""

import math

import numpy as np
from scipy import linalg

from ..exceptions import ConvergenceError, DomainError, NumericError


def sample_inverse_gaussian(mu, lam, rng, size=None):
    """Draw from InverseGaussian(mu, lam) by transformation with a uniform correction.

    ``mu`` and ``lam`` broadcast against each other and ``size``. The smaller
    root of the quadratic is taken as ``mu**2 / x_large`` to avoid the
    cancellation of the textbook formula when ``mu / lam`` is large.
    """
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(~(mu > 0)) or np.any(~(lam > 0)) or np.any(np.isinf(mu)) or np.any(np.isinf(lam)):
        raise DomainError("inverse Gaussian parameters must be finite and positive")
    if size is None:
        size = np.broadcast(mu, lam).shape
    y = rng.standard_normal(size) ** 2
    u = rng.random(size)
    my = mu * y
    x_large = mu + (mu / (2.0 * lam)) * (my + np.sqrt(4.0 * lam * my + my * my))
    x_small = mu * mu / x_large
    out = np.where(u * (mu + x_small) <= mu, x_small, x_large)
    # guard against the (measure-zero) underflow of x_small to zero
    out = np.where(out > 0, out, x_large)
    return out if out.ndim else float(out)


def _numeric_grad(f, x):
    step = 1e-6 * max(1.0, abs(x))
    return (f(x + step) - f(x - step)) / (2.0 * step)


class _Envelope:
    """Piecewise-exponential upper hull of a concave log-density."""

    def __init__(self, xs, hs, gs):
        order = np.argsort(xs)
        self.x = np.asarray(xs, dtype=float)[order]
        self.h = np.asarray(hs, dtype=float)[order]
        self.g = np.asarray(gs, dtype=float)[order]
        self._build()

    def add(self, x, h, g):
        k = np.searchsorted(self.x, x)
        self.x = np.insert(self.x, k, x)
        self.h = np.insert(self.h, k, h)
        self.g = np.insert(self.g, k, g)
        self._build()

    def _build(self):
        x, h, g = self.x, self.h, self.g
        dg = g[:-1] - g[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (h[1:] - h[:-1] - x[1:] * g[1:] + x[:-1] * g[:-1]) / dg
        flat = ~(np.abs(dg) > 1e-12 * (np.abs(g[:-1]) + np.abs(g[1:]) + 1e-300))
        z = np.where(flat | ~np.isfinite(z), 0.5 * (x[:-1] + x[1:]), z)
        z = np.clip(z, x[:-1], x[1:])
        self.lo = np.concatenate(([-np.inf], z))
        self.hi = np.concatenate((z, [np.inf]))
        self.log_mass = np.array(
            [self._segment_log_mass(k) for k in range(len(x))]
        )
        m = np.max(self.log_mass)
        w = np.exp(self.log_mass - m)
        self.cdf = np.cumsum(w) / np.sum(w)

    def upper(self, k, t):
        return self.h[k] + self.g[k] * (t - self.x[k])

    def _segment_log_mass(self, k):
        a, b, g = self.lo[k], self.hi[k], self.g[k]
        if g > 0:
            if b == np.inf:
                return np.inf
            length = b - a
            tail = -math.expm1(-g * length) if np.isfinite(length) else 1.0
            return self.upper(k, b) + math.log(tail) - math.log(g)
        if g < 0:
            if a == -np.inf:
                return np.inf
            length = b - a
            tail = -math.expm1(g * length) if np.isfinite(length) else 1.0
            return self.upper(k, a) + math.log(tail) - math.log(-g)
        if not (np.isfinite(a) and np.isfinite(b)):
            return np.inf
        return self.upper(k, a) + math.log(b - a)

    def draw(self, rng):
        k = int(np.searchsorted(self.cdf, rng.random(), side="right"))
        k = min(k, len(self.x) - 1)
        a, b, g = self.lo[k], self.hi[k], self.g[k]
        u = rng.random()
        if g > 0:
            length = b - a
            floor = math.exp(-g * length) if np.isfinite(length) else 0.0
            t = b + math.log(floor + u * (1.0 - floor)) / g
        elif g < 0:
            length = b - a
            span = -math.expm1(g * length) if np.isfinite(length) else 1.0
            t = a + math.log1p(-u * span) / g
        else:
            t = a + u * (b - a)
        return t, k


def sample_log_concave_1d(neg_log_density, mode_hint, rng, grad=None, scale=1.0,
                          max_refinements=50):
    """Exact draw from a univariate log-concave density by adaptive rejection.

    Args:
        neg_log_density: convex function ``x -> -log p(x) + const``.
        mode_hint: a point near the mode, where the density must be positive.
        rng: numpy Generator.
        grad: derivative of ``neg_log_density``; central differences if None.
        scale: spacing of the initial abscissae around ``mode_hint``.
        max_refinements: number of rejected proposals allowed before giving up.

    Raises:
        ConvergenceError: when the envelope cannot be built or the sampler
            keeps rejecting, which signals a non log-concave input.
    """
    def h(x):
        return -float(neg_log_density(x))

    def dh(x):
        if grad is not None:
            return -float(grad(x))
        return -_numeric_grad(neg_log_density, x)

    m = float(mode_hint)
    if not np.isfinite(h(m)):
        raise ConvergenceError("density must be positive at mode_hint")

    left, right = m - scale, m + scale
    for _ in range(60):
        if dh(left) > 0:
            break
        left = m - 2.0 * (m - left)
    else:
        raise ConvergenceError("could not bracket the mode from the left")
    for _ in range(60):
        if dh(right) < 0:
            break
        right = m + 2.0 * (right - m)
    else:
        raise ConvergenceError("could not bracket the mode from the right")

    xs = [left, m, right]
    env = _Envelope(xs, [h(x) for x in xs], [dh(x) for x in xs])
    refinements = 0
    while True:
        t, k = env.draw(rng)
        ht = h(t)
        if math.log(rng.random()) <= ht - env.upper(k, t):
            return t
        refinements += 1
        if refinements > max_refinements:
            raise ConvergenceError(
                f"adaptive rejection did not accept within {max_refinements} refinements"
            )
        if np.isfinite(ht) and not np.any(env.x == t):
            env.add(t, ht, dh(t))


def sample_gaussian_precision(precision, linear_term, rng, size=None):
    """Draw from ``N(Q^{-1} b, Q^{-1})`` given the precision ``Q`` and ``b``."""
    q = np.atleast_2d(np.asarray(precision, dtype=float))
    b = np.asarray(linear_term, dtype=float).ravel()
    try:
        chol = linalg.cholesky(q, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericError("precision matrix is not positive definite") from exc
    mean = linalg.cho_solve((chol, True), b)
    if size is None:
        eps = rng.standard_normal(b.shape[0])
        return mean + linalg.solve_triangular(chol.T, eps, lower=False)
    eps = rng.standard_normal((b.shape[0], size))
    return (mean[:, None] + linalg.solve_triangular(chol.T, eps, lower=False)).T


def circulant_precision_eigenvalues(image_shape, eta, rho):
    """Eigenvalues of ``I / eta + D^T D / rho^2`` under periodic boundaries."""
    h, w = image_shape
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta}")
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}")
    ky = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(h) / h)
    kx = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(w) / w)
    return 1.0 / eta + (ky[:, None] + kx[None, :]) / (rho * rho)


def sample_gaussian_circulant_fft(image_shape, eta, rho, linear_term, rng, return_mean=False):
    """Draw ``theta ~ N(Q^{-1} b, Q^{-1})`` with ``Q = I / eta + D^T D / rho^2``.

    ``D`` stacks the horizontal and vertical periodic forward differences, so
    ``Q`` is block-circulant and diagonal in the 2-D Fourier basis. ``rho`` may
    be ``inf``, in which case the difference term vanishes.
    """
    h, w = image_shape
    lam = circulant_precision_eigenvalues(image_shape, eta, rho)
    b = np.asarray(linear_term, dtype=float).reshape(h, w)
    mean = np.fft.ifft2(np.fft.fft2(b) / lam).real
    noise = np.fft.ifft2(np.fft.fft2(rng.standard_normal((h, w))) / np.sqrt(lam)).real
    draw = (mean + noise).ravel()
    if return_mean:
        return draw, mean.ravel()
    return draw
