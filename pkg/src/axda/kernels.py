"""Smoothing densities built from kernels or divergences.

A smoothing density couples an auxiliary variable ``z`` with the parameter
``theta``. Kernel sources use the scale-location form

    kappa_rho(z, theta) = rho^{-d} prod_i K((theta_i - z_i) / rho)

and divergence sources use ``kappa_rho(z, theta) ∝ exp(-phi(z, theta) / rho)``,
normalized in ``z`` for each fixed ``theta``. Multivariate versions are
coordinate-wise products of the univariate forms.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
import math

import numpy as np
from scipy import integrate, special

from ._validation import as_vector, check_dim, check_positive
from .exceptions import DomainError, UnsupportedError

_LOG_2PI = math.log(2.0 * math.pi)


class KernelFamily(str, Enum):
    GAUSSIAN = "Gaussian"
    CAUCHY = "Cauchy"
    LAPLACE = "Laplace"
    DIRICHLET = "Dirichlet"
    UNIFORM = "Uniform"
    TRIANGULAR = "Triangular"
    EPANECHNIKOV = "Epanechnikov"

    @property
    def compact(self):
        return self in _COMPACT


class DivergenceFamily(str, Enum):
    SQUARED = "SquaredLoss"
    ABSOLUTE = "AbsoluteLoss"
    LOGISTIC = "LogisticLoss"
    ITAKURA_SAITO = "ItakuraSaito"
    KULLBACK_LEIBLER = "KullbackLeibler"


_COMPACT = frozenset(
    {KernelFamily.UNIFORM, KernelFamily.TRIANGULAR, KernelFamily.EPANECHNIKOV}
)

# per-coordinate variance of the univariate kernel, None when infinite
_KERNEL_VARIANCE = {
    KernelFamily.GAUSSIAN: 1.0,
    KernelFamily.CAUCHY: None,
    KernelFamily.LAPLACE: 2.0,
    KernelFamily.DIRICHLET: None,
    KernelFamily.UNIFORM: 1.0 / 3.0,
    KernelFamily.TRIANGULAR: 1.0 / 6.0,
    KernelFamily.EPANECHNIKOV: 1.0 / 5.0,
}


def _coerce_source(source):
    if isinstance(source, (KernelFamily, DivergenceFamily)):
        return source
    for enum in (KernelFamily, DivergenceFamily):
        try:
            return enum(source)
        except ValueError:
            pass
    raise DomainError(f"unknown smoothing source {source!r}")


@dataclass(frozen=True)
class SmoothingDensity:
    """Coupling density between ``z`` and ``theta``.

    Attributes:
        source: a :class:`KernelFamily` or :class:`DivergenceFamily`.
        rho: tolerance, strictly positive.
        dim: dimension of ``z`` and ``theta``.
    """

    source: object
    rho: float
    dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "source", _coerce_source(self.source))
        object.__setattr__(self, "rho", check_positive(self.rho, "rho"))
        object.__setattr__(self, "dim", check_dim(self.dim, "dim"))

    @property
    def is_kernel(self):
        return isinstance(self.source, KernelFamily)


# ---------------------------------------------------------------------------
# univariate kernels

def log_kernel(family, u):
    """Log of the univariate kernel ``K`` evaluated elementwise at ``u``."""
    family = KernelFamily(family)
    u = np.asarray(u, dtype=float)
    au = np.abs(u)
    with np.errstate(divide="ignore"):
        if family is KernelFamily.GAUSSIAN:
            return -0.5 * u * u - 0.5 * _LOG_2PI
        if family is KernelFamily.CAUCHY:
            return -math.log(math.pi) - np.log1p(u * u)
        if family is KernelFamily.LAPLACE:
            return -au - math.log(2.0)
        if family is KernelFamily.DIRICHLET:
            # sin^2(u) / (pi u^2) with the removable singularity at 0
            return 2.0 * np.log(np.abs(np.sinc(u / math.pi))) - math.log(math.pi)
        inside = au <= 1.0
        if family is KernelFamily.UNIFORM:
            val = np.full(u.shape, -math.log(2.0))
        elif family is KernelFamily.TRIANGULAR:
            val = np.log(np.clip(1.0 - au, 0.0, None))
        else:
            val = math.log(0.75) + np.log(np.clip(1.0 - u * u, 0.0, None))
        return np.where(inside, val, -np.inf)


def _draw_kernel(family, size, rng):
    if family is KernelFamily.GAUSSIAN:
        return rng.standard_normal(size)
    if family is KernelFamily.LAPLACE:
        return rng.laplace(0.0, 1.0, size)
    if family is KernelFamily.CAUCHY:
        return rng.standard_normal(size) / rng.standard_normal(size)
    if family is KernelFamily.UNIFORM:
        return rng.uniform(-1.0, 1.0, size)
    if family is KernelFamily.TRIANGULAR:
        return rng.random(size) + rng.random(size) - 1.0
    if family is KernelFamily.EPANECHNIKOV:
        # median-of-three construction
        u = rng.uniform(-1.0, 1.0, (3,) + tuple(np.atleast_1d(size)))
        pick_second = (np.abs(u[2]) >= np.abs(u[1])) & (np.abs(u[2]) >= np.abs(u[0]))
        return np.where(pick_second, u[1], u[2])
    raise UnsupportedError(f"no sampler for the {family.value} kernel")


# ---------------------------------------------------------------------------
# divergences

def _check_divergence_domain(family, z, theta):
    if family in (DivergenceFamily.SQUARED, DivergenceFamily.ABSOLUTE):
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(theta))):
            raise DomainError("arguments must be finite")
    elif family is DivergenceFamily.ITAKURA_SAITO:
        if np.any(z < 0) or np.any(theta <= 0):
            raise DomainError("ItakuraSaito needs z >= 0 and theta > 0")
    else:
        if np.any((z < 0) | (z > 1)) or np.any((theta <= 0) | (theta >= 1)):
            raise DomainError(f"{family.value} needs z in [0, 1] and theta in (0, 1)")


def _divergence_terms(family, z, theta):
    if family is DivergenceFamily.SQUARED:
        return 0.5 * (z - theta) ** 2
    if family is DivergenceFamily.ABSOLUTE:
        return np.abs(z - theta)
    if family is DivergenceFamily.LOGISTIC:
        return special.rel_entr(z, theta) + special.rel_entr(1.0 - z, 1.0 - theta)
    if family is DivergenceFamily.ITAKURA_SAITO:
        r = z / theta
        with np.errstate(divide="ignore"):
            return r - np.log(r) - 1.0
    # KullbackLeibler, single-term form
    return special.rel_entr(z, theta)


def eval_bregman(df, z, theta):
    """Divergence ``phi(z, theta)`` summed over coordinates.

    The squared loss is taken as ``(z - theta)**2 / 2``, the divergence
    generated by ``psi(z) = z**2 / 2``, so that the associated smoothing
    density is Gaussian with variance ``rho`` and unit Hessian.
    """
    family = DivergenceFamily(df)
    z = as_vector(z, "z")
    theta = as_vector(theta, "theta", dim=z.shape[0])
    _check_divergence_domain(family, z, theta)
    return float(np.sum(_divergence_terms(family, z, theta)))


_DOMAIN_BOUNDS = {
    DivergenceFamily.LOGISTIC: (0.0, 1.0),
    DivergenceFamily.KULLBACK_LEIBLER: (0.0, 1.0),
}


@lru_cache(maxsize=4096)
def _log_normalizer_quad(family, rho, theta):
    lo, hi = _DOMAIN_BOUNDS[family]

    def phi(z):
        return float(_divergence_terms(family, np.array([z]), np.array([theta]))[0])

    # shift by the minimum of phi on a coarse grid to keep the integrand O(1)
    grid = np.linspace(lo, hi, 2001)
    shift = float(np.min(_divergence_terms(family, grid, np.full_like(grid, theta))))
    val, _ = integrate.quad(
        lambda z: math.exp(-(phi(z) - shift) / rho),
        lo, hi, points=[theta], epsabs=0.0, epsrel=1e-10, limit=400,
    )
    if not np.isfinite(val) or val <= 0.0:
        raise UnsupportedError(f"{family.value} smoothing is not normalizable at rho={rho}")
    return math.log(val) - shift / rho


def divergence_log_normalizer(family, rho, theta):
    """Log of ``int exp(-phi(z, theta) / rho) dz`` for a scalar ``theta``."""
    family = DivergenceFamily(family)
    if family is DivergenceFamily.SQUARED:
        return 0.5 * math.log(2.0 * math.pi * rho)
    if family is DivergenceFamily.ABSOLUTE:
        return math.log(2.0 * rho)
    if family is DivergenceFamily.ITAKURA_SAITO:
        a = 1.0 / rho
        return math.log(theta) + a + math.lgamma(a + 1.0) + (a + 1.0) * math.log(rho)
    return _log_normalizer_quad(family, float(rho), float(theta))


# ---------------------------------------------------------------------------
# public operations

def eval_log_kappa(sd, z, theta):
    """Normalized log-density ``log kappa_rho(z, theta)`` in ``z``."""
    z = as_vector(z, "z", dim=sd.dim)
    theta = as_vector(theta, "theta", dim=sd.dim)
    rho = sd.rho
    if sd.is_kernel:
        u = (theta - z) / rho
        return float(np.sum(log_kernel(sd.source, u)) - sd.dim * math.log(rho))
    family = sd.source
    _check_divergence_domain(family, z, theta)
    terms = _divergence_terms(family, z, theta)
    log_norm = sum(divergence_log_normalizer(family, rho, t) for t in theta)
    return float(-np.sum(terms) / rho - log_norm)


def sample_kappa(sd, theta, rng):
    """Draw ``z ~ kappa_rho(., theta)`` with independent coordinates."""
    theta = as_vector(theta, "theta", dim=sd.dim)
    if sd.is_kernel:
        if sd.source is KernelFamily.DIRICHLET:
            raise UnsupportedError("the Dirichlet kernel is evaluation-only")
        return theta + sd.rho * _draw_kernel(sd.source, sd.dim, rng)
    if sd.source is DivergenceFamily.SQUARED:
        return theta + math.sqrt(sd.rho) * rng.standard_normal(sd.dim)
    raise UnsupportedError(f"no sampler for the {sd.source.value} divergence")


_MC_MOMENT_DRAWS = 1_000_000


def kernel_moment(k, d, p):
    """Moment ``m_p = (E ||u||_2^p)^{1/p}`` of the d-dimensional product kernel.

    Returns None when the moment is infinite (Cauchy, Dirichlet).
    """
    family = KernelFamily(k)
    d = check_dim(d)
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    var = _KERNEL_VARIANCE[family]
    if var is None:
        return None
    if p == 2:
        return math.sqrt(d * var)
    if family is KernelFamily.GAUSSIAN:
        log_m = 0.5 * p * math.log(2.0) + math.lgamma(0.5 * (d + p)) - math.lgamma(0.5 * d)
        return math.exp(log_m / p)
    if d == 1:
        hi = 1.0 if family.compact else np.inf
        val, _ = integrate.quad(
            lambda u: u ** p * math.exp(log_kernel(family, u)), 0.0, hi,
            epsabs=0.0, epsrel=1e-12,
        )
        return (2.0 * val) ** (1.0 / p)
    rng = np.random.default_rng(20190531)
    u = _draw_kernel(family, (_MC_MOMENT_DRAWS, d), rng)
    return float(np.mean(np.linalg.norm(u, axis=1) ** p) ** (1.0 / p))
