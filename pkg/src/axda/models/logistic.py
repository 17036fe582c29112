"""Ridge-penalized logistic regression split per observation."""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import special

from .._validation import check_positive
from ..exceptions import ConvergenceError, DomainError
from ..kernels import KernelFamily, SmoothingDensity
from ..samplers.gibbs import Block, SplitModel
from ..samplers.variates import sample_log_concave_1d


@dataclass
class LogisticModel:
    """Labels ``y`` in {-1, +1}, features ``X`` (n x d), ridge ``tau ||theta||^2``.

    Each observation contributes ``log(1 + exp(sign * y_j * x_j^T theta))``.
    ``sign=+1`` keeps the form written in the model derivation; ``sign=-1``
    gives the conventional logistic loss.
    """

    y: np.ndarray
    X: np.ndarray
    tau: float
    rho: float
    sign: int = 1

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise DomainError("labels must be -1 or +1")
        if self.X.shape[0] != self.y.shape[0]:
            raise DomainError("X must have one row per label")
        if self.sign not in (1, -1):
            raise DomainError("sign must be +1 or -1")
        check_positive(self.tau, "tau")
        check_positive(self.rho, "rho")

    @property
    def dim(self):
        return self.X.shape[1]

    def lipschitz_constants(self):
        return np.linalg.norm(self.X, axis=1)

    def loss(self, u, j=None):
        s = self.sign * (self.y if j is None else self.y[j])
        return np.logaddexp(0.0, s * np.asarray(u, dtype=float))

    def loss_grad(self, u, j=None):
        s = self.sign * (self.y if j is None else self.y[j])
        return s * special.expit(s * np.asarray(u, dtype=float))

    def potential(self, theta):
        theta = np.asarray(theta, dtype=float)
        return float(np.sum(self.loss(self.X @ theta)) + self.tau * theta @ theta)


def _newton_block(s, a, rho2, iters=200, tol=1e-13):
    """Minimize ``logaddexp(0, s z) + (z - a)^2 / (2 rho2)`` elementwise.

    The objective is strongly convex with curvature in ``[1/rho2, 1/rho2 + 1/4]``
    and its minimizer lies in ``[a - rho2, a + rho2]`` since the loss slope is
    in ``(-1, 1)``. Newton steps are safeguarded by bisection on that bracket
    whenever they leave it or fail to halve the previous step.
    """
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    lo, hi = a - rho2, a + rho2
    z = a - rho2 * s * special.expit(s * a)
    dx_old = hi - lo
    for _ in range(iters):
        p = special.expit(s * z)
        g = s * p + (z - a) / rho2
        curv = p * (1.0 - p) + 1.0 / rho2
        lo = np.where(g < 0, z, lo)
        hi = np.where(g > 0, z, hi)
        newton = z - g / curv
        bisect = (newton <= lo) | (newton >= hi) | (np.abs(2.0 * g) > np.abs(dx_old * curv))
        z_new = np.where(bisect, 0.5 * (lo + hi), newton)
        dx_old = np.where(bisect, 0.5 * (hi - lo), np.abs(g / curv))
        if np.all((np.abs(z_new - z) <= tol * (1.0 + np.abs(z))) | (g == 0)):
            return np.where(g == 0, z, z_new)
        z = z_new
    return z


def _expit(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _log1pexp(x):
    return x + math.log1p(math.exp(-x)) if x > 0 else math.log1p(math.exp(x))


def _newton_scalar(s, a, rho2, iters=200, tol=1e-13):
    """Scalar version of :func:`_newton_block`, free of array overhead."""
    lo, hi = a - rho2, a + rho2
    z = a - rho2 * s * _expit(s * a)
    dx_old = hi - lo
    for _ in range(iters):
        p = _expit(s * z)
        g = s * p + (z - a) / rho2
        if g == 0.0:
            return z
        curv = p * (1.0 - p) + 1.0 / rho2
        if g < 0:
            lo = z
        else:
            hi = z
        newton = z - g / curv
        if newton <= lo or newton >= hi or abs(2.0 * g) > abs(dx_old * curv):
            z_new = 0.5 * (lo + hi)
            dx_old = 0.5 * (hi - lo)
        else:
            z_new = newton
            dx_old = abs(g / curv)
        if abs(z_new - z) <= tol * (1.0 + abs(z)):
            return z_new
        z = z_new
    return z


def _tangent_draw_scalar(s, a, rho, rng, max_rounds=200):
    rho2 = rho * rho
    mode = _newton_scalar(s, a, rho2)
    slope = s * _expit(s * mode)
    base = _log1pexp(s * mode)
    centre = a - rho2 * slope
    for _ in range(max_rounds):
        cand = centre + rho * rng.standard_normal()
        gap = _log1pexp(s * cand) - base - slope * (cand - mode)
        if math.log(rng.random()) <= -gap:
            return cand
    raise ConvergenceError("tangent rejection sampler did not finish")


def logistic_minimize_z(s, a, rho):
    return _newton_block(s, a, rho * rho)


def logistic_sample_many(s, a, rho, n, rng, max_rounds=200):
    """Exact draws from ``exp(-logaddexp(0, s z) - (z - a)^2 / (2 rho^2))``.

    The convex loss is bounded below by its tangent at the conditional mode,
    which turns the Gaussian coupling into an exact Gaussian envelope. The
    acceptance probability is ``exp(-(loss - tangent))``.
    """
    rho2 = rho * rho
    s = np.broadcast_to(np.asarray(s, dtype=float), np.shape(a))
    a = np.asarray(a, dtype=float)
    mode = _newton_block(s, a, rho2)
    slope = s * special.expit(s * mode)
    base = np.logaddexp(0.0, s * mode)
    centre = a - rho2 * slope
    shape = (int(n),) + a.shape
    out = np.empty(shape)
    todo = np.ones(shape, dtype=bool)
    for _ in range(max_rounds):
        k = int(todo.sum())
        if k == 0:
            return out
        idx = np.nonzero(todo)
        cand = centre[idx[1:]] + rho * rng.standard_normal(k)
        gap = np.logaddexp(0.0, s[idx[1:]] * cand) - base[idx[1:]] - slope[idx[1:]] * (cand - mode[idx[1:]])
        accept = np.log(rng.random(k)) <= -gap
        sel = tuple(i[accept] for i in idx)
        out[sel] = cand[accept]
        todo[sel] = False
    raise ConvergenceError("tangent rejection sampler did not finish")


@lru_cache(maxsize=8)
def _hermite_rule(nodes):
    return np.polynomial.hermite_e.hermegauss(nodes)


def logistic_conditional_mean(s, a, rho, nodes=80):
    """``E[z | theta]`` for each block, by Gauss-Hermite quadrature around ``a``."""
    x, w = _hermite_rule(nodes)
    a = np.asarray(a, dtype=float)
    z = a[..., None] + rho * x
    logw = np.log(w) - np.logaddexp(0.0, np.asarray(s, dtype=float)[..., None] * z)
    logw -= logw.max(axis=-1, keepdims=True)
    ww = np.exp(logw)
    return np.sum(ww * z, axis=-1) / np.sum(ww, axis=-1)


def logistic_split_model(m, use_ars=True):
    """One scalar block per observation, coupled through ``x_j^T theta``."""
    rho = m.rho
    blocks = []
    for j in range(m.y.shape[0]):
        s = m.sign * m.y[j]

        def sample_z(a, z_prev, rng, s=s):
            a0 = float(a[0])
            if use_ars:
                mode = _newton_scalar(s, a0, rho * rho)
                val = sample_log_concave_1d(
                    lambda z: np.logaddexp(0.0, s * z) + (z - a0) ** 2 / (2.0 * rho * rho),
                    mode, rng,
                    grad=lambda z: s * special.expit(s * z) + (z - a0) / (rho * rho),
                    scale=min(rho, 1.0),
                )
                return np.array([val])
            return np.array([_tangent_draw_scalar(s, a0, rho, rng)])

        blocks.append(Block(
            operator=m.X[j : j + 1],
            smoothing=SmoothingDensity(KernelFamily.GAUSSIAN, rho, 1),
            sample_z=sample_z,
            potential=lambda z, s=s: float(np.logaddexp(0.0, s * z[0])),
            minimize_z=lambda a, r, s=s: np.atleast_1d(_newton_block(s, a, r * r)),
            conditional_mean=lambda a, s=s: np.atleast_1d(logistic_conditional_mean(s, a, rho)),
            sample_many=lambda a, n, rng, s=s: logistic_sample_many(s, a, rho, n, rng),
        ))
    d = m.dim
    return SplitModel(
        blocks=blocks,
        theta_dim=d,
        theta_precision=2.0 * m.tau * np.eye(d),
        theta_linear=np.zeros(d),
        potential=m.potential,
        name="logistic",
    )


def synthetic_logistic(n, d, rng, sign=1, tau=1.0, rho=0.1, unit_norm=False):
    """Features uniform on [0, 1] (or unit-norm rows), labels from a random direction."""
    X = rng.random((n, d))
    if unit_norm:
        X /= np.linalg.norm(X, axis=1, keepdims=True)
    beta = rng.standard_normal(d)
    prob = special.expit(X @ beta - np.mean(X @ beta))
    y = np.where(rng.random(n) < prob, 1.0, -1.0)
    return LogisticModel(y=y, X=X, tau=tau, rho=rho, sign=sign)
