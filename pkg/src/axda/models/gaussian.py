"""Multivariate Gaussian target smoothed by a Gaussian kernel."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .._validation import as_vector, check_positive
from ..bounds import RegularityProfile
from ..exceptions import DomainError, NumericError
from ..kernels import KernelFamily, SmoothingDensity
from ..samplers.gibbs import Block, SplitModel


@dataclass
class GaussianTarget:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        self.mean = as_vector(self.mean, "mean")
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (self.mean.shape[0], self.mean.shape[0]):
            raise DomainError("covariance shape does not match the mean")
        try:
            self._chol = linalg.cholesky(cov, lower=True)
        except linalg.LinAlgError as exc:
            raise NumericError("covariance is not positive definite") from exc
        self.covariance = cov

    @property
    def dim(self):
        return self.mean.shape[0]

    def logpdf(self, x):
        """Log-density at the rows of ``x``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = linalg.solve_triangular(self._chol, (x - self.mean).T, lower=True)
        log_det = 2.0 * np.sum(np.log(np.diag(self._chol)))
        return -0.5 * (np.sum(r * r, axis=0) + log_det + self.dim * np.log(2.0 * np.pi))

    def sample(self, n, rng):
        eps = rng.standard_normal((int(n), self.dim))
        return self.mean + eps @ self._chol.T


def squared_exponential_covariance(d, length_scale=1.5, amplitude=2.0, jitter=1e-6,
                                   span=(-3.0, 3.0)):
    """Squared-exponential covariance on ``d`` regularly spaced points of ``span``."""
    s = np.linspace(span[0], span[1], int(d))
    diff = s[:, None] - s[None, :]
    return amplitude * np.exp(-diff * diff / (2.0 * length_scale ** 2)) + jitter * np.eye(int(d))


def gaussian_marginal_exact(t, rho):
    """Smoothed marginal ``N(mean, cov + rho^2 I)``."""
    rho = check_positive(rho, "rho", allow_zero=True)
    return GaussianTarget(t.mean.copy(), t.covariance + rho * rho * np.eye(t.dim))


def gaussian_w2_exact(t, rho):
    """2-Wasserstein distance between the target and its smoothed marginal.

    Both covariances commute, so the distance reduces to
    ``sum_i (sqrt(l_i) - sqrt(l_i + rho^2))^2`` over the eigenvalues of the
    target covariance.
    """
    lam = np.clip(linalg.eigvalsh(t.covariance), 0.0, None)
    gap = rho * rho / (np.sqrt(lam) + np.sqrt(lam + rho * rho))
    return float(np.sqrt(np.sum(gap * gap)))


def gaussian_w2_printed(t, rho):
    """``sqrt(Tr(Sigma + rho^2 I - 2 rho Sigma^{1/2}))``.

    This is the distance between ``N(mean, Sigma)`` and ``N(mean, rho^2 I)``;
    it is reported next to :func:`gaussian_w2_exact` for comparison.
    """
    lam = np.clip(linalg.eigvalsh(t.covariance), 0.0, None)
    return float(np.sqrt(np.sum((np.sqrt(lam) - rho) ** 2)))


def gaussian_regularity(t):
    """Regularity constants of the quadratic potential.

    The gradient Lipschitz constant is ``1 / lambda_min(Sigma)`` and the second
    moment of the gradient under the target is ``Tr(Sigma^{-1})``.
    """
    lam = linalg.eigvalsh(t.covariance)
    return RegularityProfile(
        d=t.dim,
        grad_lipschitz=float(1.0 / lam[0]),
        grad_second_moment=float(np.sum(1.0 / lam)),
        convex=True,
    )


def gaussian_split_model(t, rho):
    """One-block split model ``z ~ N(mean, cov)``, ``theta | z ~ N(z, rho^2 I)``.

    The block potential is the target potential itself and the operator is the
    identity, so the theta-marginal of the augmented chain is the smoothed
    marginal.
    """
    d = t.dim
    rho = check_positive(rho, "rho")
    prec = linalg.cho_solve((t._chol, True), np.eye(d))
    prec_mean = prec @ t.mean
    post_prec = prec + np.eye(d) / rho ** 2
    post_chol = linalg.cholesky(post_prec, lower=True)

    def sample_z(a_theta, z_prev, rng):
        b = prec_mean + a_theta / rho ** 2
        mean = linalg.cho_solve((post_chol, True), b)
        return mean + linalg.solve_triangular(post_chol.T, rng.standard_normal(d), lower=False)

    def conditional_mean(a_theta):
        return linalg.cho_solve((post_chol, True), prec_mean + a_theta / rho ** 2)

    def minimize_z(a_theta, rho_):
        m = prec + np.eye(d) / rho_ ** 2
        return linalg.solve(m, prec_mean + a_theta / rho_ ** 2, assume_a="pos")

    def potential(z):
        r = z - t.mean
        return 0.5 * float(r @ prec @ r)

    block = Block(
        operator=np.eye(d),
        smoothing=SmoothingDensity(KernelFamily.GAUSSIAN, rho, d),
        sample_z=sample_z,
        potential=potential,
        minimize_z=minimize_z,
        conditional_mean=conditional_mean,
    )
    return SplitModel(blocks=[block], theta_dim=d, theta_init=t.mean.copy(), name="gaussian")
