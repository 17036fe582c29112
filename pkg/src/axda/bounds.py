"""Non-asymptotic bounds between a target and its smoothed approximation.

All bounds assume Gaussian smoothing with tolerance ``rho``. The parabolic
cylinder function is handled in log domain, and ratios of the form
``D_{-d}(z) / D_{-d}(-z)`` are reduced to differences of the log-integral

    log I_d(z) = log int_0^inf exp(-x z - x^2 / 2) x^{d-1} dx,

since the ``exp(-z^2/4)`` prefactors cancel.
"""

from dataclasses import dataclass, field
import math
import warnings
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, linalg, special

from ._validation import check_positive, check_probability
from .exceptions import DomainError, PreconditionError
from .kernels import KernelFamily, kernel_moment

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_order(d):
    if not (isinstance(d, (int, float, np.integer, np.floating)) and np.isfinite(d)) or d <= 0:
        raise DomainError(f"order d must be a positive real, got {d!r}")
    return float(d)


def _mode(d, z):
    # positive root of x^2 + z x - (d - 1) = 0, written without cancellation
    disc = math.sqrt(z * z + 4.0 * (d - 1.0))
    if z > 0:
        return 2.0 * (d - 1.0) / (z + disc)
    return 0.5 * (-z + disc)


def log_integral(d, z):
    """``log int_0^inf exp(-x z - x^2/2) x^{d-1} dx`` for ``d > 0``."""
    d = _check_order(d)
    z = float(z)
    if d == 1.0:
        return 0.5 * z * z + _HALF_LOG_2PI + float(special.log_ndtr(-z))
    if d < 1.0:
        # integrable singularity at the origin, handled with an algebraic weight
        peak = max(0.0, -z)
        shift = 0.5 * peak * peak
        upper = peak + 40.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(
                lambda x: math.exp(-x * z - 0.5 * x * x - shift), 0.0, upper,
                weight="alg", wvar=(d - 1.0, 0.0), epsabs=0.0, epsrel=1e-13, limit=200,
            )
        return math.log(val) + shift

    x_star = _mode(d, z)
    log_x_star = math.log(x_star)

    def h(x):
        return -x * z - 0.5 * x * x + (d - 1.0) * math.log(x)

    h_star = -x_star * z - 0.5 * x_star * x_star + (d - 1.0) * log_x_star
    width = 1.0 / math.sqrt(1.0 + (d - 1.0) / (x_star * x_star))
    lo = max(0.0, x_star - 40.0 * width)
    hi = x_star + 40.0 * width

    def integrand(x):
        if x <= 0.0:
            return 0.0
        return math.exp(h(x) - h_star)

    with warnings.catch_warnings():
        # the tolerance sits near machine precision; roundoff notices are expected
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(
            integrand, lo, hi, points=[x_star], epsabs=0.0, epsrel=1e-13, limit=200
        )
    return math.log(val) + h_star


def log_parabolic_cylinder(d, z):
    """Log of the parabolic cylinder function ``D_{-d}(z)`` for ``d > 0``."""
    d = _check_order(d)
    z = float(z)
    return -0.25 * z * z - math.lgamma(d) + log_integral(d, z)


def _log_delta(d, lr):
    # log D_{-d}(lr) - log D_{-d}(-lr); the Gaussian prefactors cancel
    if lr == 0.0:
        return 0.0
    return log_integral(d, lr) - log_integral(d, -lr)


def tv_bound_lipschitz(blocks, d, clamp=True):
    """TV bound for Lipschitz potentials under Gaussian smoothing.

    Args:
        blocks: iterable of ``(L_j, rho_j)`` pairs, one per potential block.
        d: dimension of the parameter.
        clamp: clip the result to ``[0, 1]``.

    Returns:
        ``1 - prod_j D_{-d}(L_j rho_j) / D_{-d}(-L_j rho_j)``.
    """
    blocks = list(blocks)
    if not blocks:
        raise DomainError("at least one (L, rho) block is required")
    d = _check_order(d)
    total = 0.0
    for lip, rho in blocks:
        lip = check_positive(lip, "L", allow_zero=True)
        rho = check_positive(rho, "rho", allow_zero=True)
        total += _log_delta(d, lip * rho)
    raw = -math.expm1(total)
    return min(max(raw, 0.0), 1.0) if clamp else raw


def tv_bound_lipschitz_asymptote(lipschitz, d, rho):
    """Small-``rho`` linearization ``2 sqrt(2) Gamma((d+1)/2) / Gamma(d/2) L rho``."""
    d = _check_order(d)
    log_c = 1.5 * math.log(2.0) + math.lgamma(0.5 * (d + 1.0)) - math.lgamma(0.5 * d)
    return math.exp(log_c) * lipschitz * rho


@dataclass(frozen=True)
class RegularityProfile:
    """Regularity constants of a potential ``f``.

    Attributes:
        d: dimension.
        lipschitz: Lipschitz constant of ``f``.
        grad_lipschitz: Lipschitz constant of the gradient of ``f``.
        grad_second_moment: second moment of the gradient under the target.
        convex: whether ``f`` is convex.
    """

    d: float
    lipschitz: Optional[float] = None
    grad_lipschitz: Optional[float] = None
    grad_second_moment: Optional[float] = None
    convex: bool = False

    def __post_init__(self):
        _check_order(self.d)
        for name in ("lipschitz", "grad_lipschitz", "grad_second_moment"):
            value = getattr(self, name)
            if value is not None:
                check_positive(value, name, allow_zero=True)


def _require_smooth_convex(rp):
    if rp.grad_lipschitz is None or rp.grad_second_moment is None or not rp.convex:
        raise PreconditionError(
            "smooth convex bound needs grad_lipschitz, grad_second_moment and convex=True"
        )


def tv_bound_smooth_convex(rp, rho, clamp=True):
    """TV bound for convex potentials with Lipschitz gradient."""
    _require_smooth_convex(rp)
    rho = check_positive(rho, "rho", allow_zero=True)
    if rho == 0.0:
        return 0.0
    m, mm, d = rp.grad_lipschitz, rp.grad_second_moment, float(rp.d)
    a = 2.0 * rho * rho * m
    log_decay = -0.5 * d * math.log1p(a)
    b = rho ** 4 * m * mm / (1.0 + a)
    if b < 1.0:
        raw = -math.expm1(log_decay + math.log1p(-b))
    else:
        raw = 1.0 - math.exp(log_decay) * (1.0 - b)
    return min(max(raw, 0.0), 1.0) if clamp else raw


def tv_bound_smooth_asymptote(rp, rho):
    """Small-``rho`` leading term ``rho^2 d M``."""
    if rp.grad_lipschitz is None:
        raise PreconditionError("grad_lipschitz is required")
    return rho * rho * float(rp.d) * rp.grad_lipschitz


def wasserstein_bound(k, d, p, rho):
    """``rho * m_p``, or None when the kernel moment is infinite."""
    rho = check_positive(rho, "rho", allow_zero=True)
    if rho == 0.0:
        return 0.0
    m = kernel_moment(k, d, p)
    return None if m is None else rho * m


def potential_gap_bounds(lipschitz, d, rho):
    """Bounds ``(lower, upper)`` on ``f_rho - f`` for a Lipschitz potential."""
    lipschitz = check_positive(lipschitz, "L", allow_zero=True)
    rho = check_positive(rho, "rho", allow_zero=True)
    d = _check_order(d)
    lr = lipschitz * rho
    if lr == 0.0:
        return 0.0, 0.0
    # log N_rho - log D_{-d}(-/+ lr) collapses to log I_d(0) - log I_d(-/+ lr)
    log_i0 = (0.5 * d - 1.0) * math.log(2.0) + math.lgamma(0.5 * d)
    return log_i0 - log_integral(d, -lr), log_i0 - log_integral(d, lr)


def coverage_interval(lipschitz, d, rho, alpha):
    """Interval containing the target mass of a smoothed ``(1 - alpha)`` region."""
    alpha = check_probability(alpha)
    lower, upper = potential_gap_bounds(lipschitz, d, rho)
    lo = (1.0 - alpha) * math.exp(lower)
    hi = min(1.0, (1.0 - alpha) * math.exp(upper))
    return lo, hi


def bregman_bias_leading(hessian_pi, hessian_div, rho):
    """Leading pointwise bias ``(rho/2) Tr(H_pi H_div^{-1})`` of divergence smoothing."""
    h_pi = np.atleast_2d(np.asarray(hessian_pi, dtype=float))
    h_div = np.atleast_2d(np.asarray(hessian_div, dtype=float))
    if h_pi.shape != h_div.shape or h_div.shape[0] != h_div.shape[1]:
        raise DomainError("Hessians must be square with matching shapes")
    if not np.allclose(h_div, h_div.T):
        raise DomainError("divergence Hessian must be symmetric")
    try:
        factor = linalg.cho_factor(h_div)
    except linalg.LinAlgError as exc:
        raise DomainError("divergence Hessian is not positive definite") from exc
    return 0.5 * rho * float(np.trace(linalg.cho_solve(factor, h_pi)))


@dataclass
class BoundReport:
    rho: float
    tv_lipschitz: Optional[float] = None
    tv_lipschitz_asymptote: Optional[float] = None
    tv_smooth: Optional[float] = None
    tv_smooth_asymptote: Optional[float] = None
    wasserstein_p: Optional[float] = None
    potential_gap: Optional[Tuple[float, float]] = None
    coverage: Optional[Tuple[float, float]] = None
    raw: dict = field(default_factory=dict)


def bound_report(rp, rho, kernel=KernelFamily.GAUSSIAN, p=2, alpha=None):
    """Evaluate every bound whose constants are available in ``rp``."""
    rep = BoundReport(rho=float(rho))
    if rp.lipschitz is not None:
        rep.raw["tv_lipschitz"] = tv_bound_lipschitz([(rp.lipschitz, rho)], rp.d, clamp=False)
        rep.tv_lipschitz = min(max(rep.raw["tv_lipschitz"], 0.0), 1.0)
        rep.tv_lipschitz_asymptote = tv_bound_lipschitz_asymptote(rp.lipschitz, rp.d, rho)
        rep.potential_gap = potential_gap_bounds(rp.lipschitz, rp.d, rho)
        if alpha is not None:
            rep.coverage = coverage_interval(rp.lipschitz, rp.d, rho, alpha)
    if rp.grad_lipschitz is not None and rp.grad_second_moment is not None and rp.convex:
        rep.raw["tv_smooth"] = tv_bound_smooth_convex(rp, rho, clamp=False)
        rep.tv_smooth = min(max(rep.raw["tv_smooth"], 0.0), 1.0)
        rep.tv_smooth_asymptote = tv_bound_smooth_asymptote(rp, rho)
    if float(rp.d).is_integer():
        rep.wasserstein_p = wasserstein_bound(kernel, int(rp.d), p, rho)
    return rep
