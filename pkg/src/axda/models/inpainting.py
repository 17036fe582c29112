"""Total-variation image inpainting with a split gradient field.

The posterior is ``exp(-||y - H theta||^2 / (2 sigma^2) - tau sum_i ||(D theta)_i||_2)``
where ``H`` keeps the observed pixels and ``D`` stacks the periodic horizontal
and vertical forward differences. The split model moves the TV term onto a
gradient field ``Z`` coupled to ``D theta``, and each ``||Z_i||`` is expanded
as a Gaussian scale mixture with mixing weight ``gamma_i``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .._validation import check_positive
from ..exceptions import DomainError
from ..kernels import KernelFamily, SmoothingDensity
from ..samplers.gibbs import Block, SplitModel
from ..samplers.variates import (
    sample_gaussian_circulant_fft,
    sample_gaussian_precision,
    sample_inverse_gaussian,
)


def periodic_gradient(img):
    """Stacked horizontal and vertical periodic forward differences, shape (2, h, w)."""
    return np.stack([np.roll(img, -1, axis=1) - img, np.roll(img, -1, axis=0) - img])


def periodic_gradient_adjoint(field):
    """Adjoint of :func:`periodic_gradient`."""
    gx, gy = field[0], field[1]
    return (np.roll(gx, 1, axis=1) - gx) + (np.roll(gy, 1, axis=0) - gy)


def gradient_matrix(image_shape):
    """Dense ``D`` of shape (2hw, hw), for small oracle problems."""
    h, w = image_shape
    d = h * w
    cols = [periodic_gradient(e.reshape(h, w)).ravel() for e in np.eye(d)]
    return np.array(cols).T


@dataclass
class InpaintingModel:
    """Observed pixels ``y`` at flat indices ``mask`` of an ``image_shape`` image."""

    y: np.ndarray
    mask: np.ndarray
    image_shape: tuple
    sigma: float
    tau: float
    rho: float
    eta: Optional[float] = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.mask = np.asarray(self.mask, dtype=np.int64).ravel()
        self.image_shape = tuple(int(s) for s in self.image_shape)
        d = self.image_shape[0] * self.image_shape[1]
        if self.mask.shape != self.y.shape:
            raise DomainError("one observation per mask index is required")
        if np.unique(self.mask).size != self.mask.size:
            raise DomainError("mask indices must be unique")
        if self.mask.size >= d or np.any((self.mask < 0) | (self.mask >= d)):
            raise DomainError("mask must be a strict subset of the pixel indices")
        check_positive(self.sigma, "sigma")
        check_positive(self.tau, "tau")
        check_positive(self.rho, "rho")
        if self.eta is None:
            self.eta = 0.9 * self.sigma ** 2
        check_positive(self.eta, "eta")
        if not self.eta < self.sigma ** 2:
            raise DomainError("the auxiliary step needs eta < sigma^2")
        self.observed = np.zeros(d)
        self.observed[self.mask] = 1.0
        self.adjoint_y = np.zeros(d)
        self.adjoint_y[self.mask] = self.y

    @property
    def dim(self):
        return self.image_shape[0] * self.image_shape[1]

    def potential(self, theta):
        img = np.asarray(theta, dtype=float).reshape(self.image_shape)
        r = self.y - img.ravel()[self.mask]
        grad = periodic_gradient(img)
        tv = np.sum(np.sqrt(grad[0] ** 2 + grad[1] ** 2))
        return float(r @ r / (2.0 * self.sigma ** 2) + self.tau * tv)

    def dense_precision(self):
        dmat = gradient_matrix(self.image_shape)
        return np.diag(self.observed) / self.sigma ** 2 + dmat.T @ dmat / self.rho ** 2


def _draw_gradient_field(m, grad, Z_prev, rng):
    norms = np.sqrt(Z_prev[0] ** 2 + Z_prev[1] ** 2)
    zero = norms == 0.0
    inv_gamma = sample_inverse_gaussian(m.tau / np.where(zero, 1.0, norms), m.tau ** 2, rng)
    gamma = 1.0 / inv_gamma
    if np.any(zero):
        # ||Z_i|| = 0 is the Levy limit of the inverse Gaussian: gamma ~ Gamma(1/2, rate tau^2 / 2)
        gamma[zero] = rng.gamma(0.5, 2.0 / m.tau ** 2, int(zero.sum()))
    rho2 = m.rho ** 2
    mean = gamma * grad / (rho2 + gamma)
    std = np.sqrt(rho2 * gamma / (rho2 + gamma))
    return mean + std * rng.standard_normal(grad.shape), gamma


def inpainting_step_z(m, theta, Z_prev, rng):
    """Draw mixing weights from ``Z_prev`` then a new gradient field given ``theta``.

    Returns ``(Z, gamma)`` with ``Z`` of shape (2, h, w).
    """
    grad = periodic_gradient(np.asarray(theta, dtype=float).reshape(m.image_shape))
    return _draw_gradient_field(m, grad, np.asarray(Z_prev, dtype=float).reshape(grad.shape), rng)


def inpainting_step_theta(m, theta_prev, Z, rng):
    """Exact-augmentation theta update through the auxiliary variable ``v``.

    ``v ~ N(W theta_prev, W)`` with ``W = I / eta - H^T H / sigma^2`` (diagonal),
    then ``theta`` is drawn from the Gaussian with precision
    ``I / eta + D^T D / rho^2`` by FFT diagonalization.
    """
    w_diag = 1.0 / m.eta - m.observed / m.sigma ** 2
    theta_prev = np.asarray(theta_prev, dtype=float).ravel()
    v = w_diag * theta_prev + np.sqrt(w_diag) * rng.standard_normal(m.dim)
    b = v + m.adjoint_y / m.sigma ** 2 + periodic_gradient_adjoint(Z).ravel() / m.rho ** 2
    return sample_gaussian_circulant_fft(m.image_shape, m.eta, m.rho, b, rng)


def inpainting_step_theta_dense(m, Z, rng, precision=None):
    """Direct draw of theta given ``Z`` from the dense conditional precision."""
    q = m.dense_precision() if precision is None else precision
    b = m.adjoint_y / m.sigma ** 2 + periodic_gradient_adjoint(Z).ravel() / m.rho ** 2
    return sample_gaussian_precision(q, b, rng)


def inpainting_split_model(m, dense=False):
    """Split model over ``theta`` and ``Z``; ``dense=True`` uses the direct theta draw."""
    h, w = m.image_shape
    d = m.dim
    op = LinearOperator(
        (2 * d, d), dtype=float,
        matvec=lambda x: periodic_gradient(np.asarray(x).reshape(h, w)).ravel(),
        rmatvec=lambda y: periodic_gradient_adjoint(np.asarray(y).reshape(2, h, w)).ravel(),
    )
    precision = m.dense_precision() if dense else None

    def sample_z(a_theta, z_prev, rng):
        # the z-step sees theta only through D theta
        Z, gamma = _draw_gradient_field(m, a_theta.reshape(2, h, w), z_prev.reshape(2, h, w), rng)
        return Z.ravel(), gamma

    def sample_theta(state, rng):
        Z = state.z[0].reshape(2, h, w)
        if dense:
            return inpainting_step_theta_dense(m, Z, rng, precision)
        return inpainting_step_theta(m, state.theta, Z, rng)

    block = Block(
        operator=op,
        smoothing=SmoothingDensity(KernelFamily.GAUSSIAN, m.rho, 2 * d),
        sample_z=sample_z,
        potential=lambda z: m.tau * float(np.sum(np.sqrt(z.reshape(2, -1)[0] ** 2 + z.reshape(2, -1)[1] ** 2))),
    )
    theta0 = np.full(d, float(np.mean(m.y)))
    theta0[m.mask] = m.y
    return SplitModel(blocks=[block], theta_dim=d, sample_theta=sample_theta,
                      potential=m.potential, theta_init=theta0, name="inpainting")


def ellipse_phantom(size=32):
    """Piecewise-constant test image with values in [0, 1]."""
    yy, xx = np.mgrid[-1:1:complex(0, size), -1:1:complex(0, size)]
    img = np.zeros((size, size))
    shapes = [
        (0.0, 0.0, 0.69, 0.92, 0.0, 1.0),
        (0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8),
        (0.22, 0.0, 0.11, 0.31, -18.0, -0.2),
        (-0.22, 0.0, 0.16, 0.41, 18.0, -0.2),
        (0.0, 0.35, 0.21, 0.25, 0.0, 0.1),
        (0.0, -0.605, 0.046, 0.023, 0.0, 0.1),
    ]
    for x0, y0, a, b, angle, value in shapes:
        t = np.deg2rad(angle)
        xr = (xx - x0) * np.cos(t) + (yy - y0) * np.sin(t)
        yr = -(xx - x0) * np.sin(t) + (yy - y0) * np.cos(t)
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += value
    return np.clip(img, 0.0, 1.0)


def damaged_observation(image, observed_fraction, sigma, rng):
    """Random pixel mask and noisy observations of the kept pixels."""
    flat = np.asarray(image, dtype=float).ravel()
    d = flat.size
    n_obs = int(round(observed_fraction * d))
    n_obs = min(max(n_obs, 1), d - 1)
    mask = np.sort(rng.choice(d, size=n_obs, replace=False))
    y = flat[mask] + sigma * rng.standard_normal(n_obs)
    return mask, y
