"""Generic split Gibbs sampler.

The augmented target is

    pi_rho(theta, z_1..z_J) ∝ exp(-sum_j f_j(z_j)) prod_j kappa_rho_j(z_j, A_j theta)

and the sampler alternates one draw of ``theta`` given all blocks with one
draw of each ``z_j`` given ``theta``. Random streams are derived from
``(seed, iteration, slot)`` with a counter-based generator, so a run is
reproducible whether the block updates execute serially or in threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
from typing import Callable, List, Optional

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator

from ..exceptions import BlockSamplingError, DomainError, NumericError
from ..kernels import DivergenceFamily, KernelFamily, SmoothingDensity


def stream(seed, iteration, slot):
    """Independent generator for one (iteration, slot) cell of a run."""
    return np.random.Generator(
        np.random.Philox(key=int(seed), counter=[0, 0, int(iteration), int(slot)])
    )


def apply_operator(op, x):
    if isinstance(op, LinearOperator):
        return np.asarray(op.matvec(x)).ravel()
    return np.asarray(op) @ x


def apply_adjoint(op, y):
    if isinstance(op, LinearOperator):
        return np.asarray(op.rmatvec(y)).ravel()
    return np.asarray(op).T @ y


def operator_shape(op):
    return tuple(op.shape)


def coupling_variance(sd):
    """Variance of the Gaussian coupling, or None for non-Gaussian smoothing."""
    if sd.source is KernelFamily.GAUSSIAN:
        return sd.rho * sd.rho
    if sd.source is DivergenceFamily.SQUARED:
        return sd.rho
    return None


@dataclass
class Block:
    """One potential block ``f_j`` together with its coupling.

    Attributes:
        operator: matrix or ``LinearOperator`` mapping theta (dim d) to the
            block space (dim k).
        smoothing: smoothing density of dimension k.
        sample_z: ``(a_theta, z_prev, rng) -> z``; may return ``(z, latent)``.
        potential: ``z -> f_j(z)``.
        minimize_z: ``(a_theta, rho) -> argmin_z f_j(z) + ||a_theta - z||^2 / (2 rho^2)``.
        conditional_mean: ``a_theta -> E[z | theta]``.
        sample_many: ``(a_theta, n, rng) -> (n, k)`` array of conditional draws.
    """

    operator: object
    smoothing: SmoothingDensity
    sample_z: Optional[Callable] = None
    potential: Optional[Callable] = None
    minimize_z: Optional[Callable] = None
    conditional_mean: Optional[Callable] = None
    sample_many: Optional[Callable] = None

    def __post_init__(self):
        shape = operator_shape(self.operator)
        if len(shape) != 2:
            raise DomainError("block operator must be two-dimensional")
        if shape[0] != self.smoothing.dim:
            raise DomainError(
                f"operator output dim {shape[0]} != smoothing dim {self.smoothing.dim}"
            )


@dataclass
class GibbsState:
    theta: np.ndarray
    z: List[np.ndarray]
    latent: list = field(default_factory=list)


@dataclass
class SplitModel:
    """Split model with a Gaussian or user-supplied theta conditional.

    When ``sample_theta`` is None the theta step is the Gaussian conditional
    with precision ``theta_precision + sum_j A_j^T A_j / v_j`` and linear term
    ``theta_linear + sum_j A_j^T z_j / v_j``, where ``v_j`` is the coupling
    variance of block j. This needs every block to use Gaussian smoothing.
    """

    blocks: list
    theta_dim: int
    theta_precision: Optional[np.ndarray] = None
    theta_linear: Optional[np.ndarray] = None
    sample_theta: Optional[Callable] = None
    potential: Optional[Callable] = None
    theta_init: Optional[np.ndarray] = None
    name: str = "split"

    def __post_init__(self):
        if len(self.blocks) < 1:
            raise DomainError("a split model needs at least one block")
        d = int(self.theta_dim)
        for j, blk in enumerate(self.blocks):
            if operator_shape(blk.operator)[1] != d:
                raise DomainError(f"block {j} operator does not act on dimension {d}")
        if self.theta_precision is None:
            self.theta_precision = np.zeros((d, d))
        if self.theta_linear is None:
            self.theta_linear = np.zeros(d)
        self._chol = None

    @property
    def rho(self):
        return [blk.smoothing.rho for blk in self.blocks]

    def _gaussian_pieces(self):
        variances = [coupling_variance(blk.smoothing) for blk in self.blocks]
        if any(v is None for v in variances):
            raise DomainError("the default theta step needs Gaussian smoothing in every block")
        return variances

    def theta_system(self):
        """Cholesky factor of the theta-conditional precision (cached)."""
        if self._chol is None:
            variances = self._gaussian_pieces()
            q = np.array(self.theta_precision, dtype=float, copy=True)
            eye = np.eye(self.theta_dim)
            for blk, v in zip(self.blocks, variances):
                a = np.asarray(blk.operator @ eye) if isinstance(blk.operator, LinearOperator) \
                    else np.asarray(blk.operator, dtype=float)
                q += a.T @ a / v
            try:
                self._chol = linalg.cho_factor(q, lower=True)
            except linalg.LinAlgError as exc:
                raise DomainError("theta-conditional precision is singular") from exc
        return self._chol

    def theta_linear_term(self, z):
        variances = self._gaussian_pieces()
        b = np.array(self.theta_linear, dtype=float, copy=True)
        for blk, zj, v in zip(self.blocks, z, variances):
            b += apply_adjoint(blk.operator, zj) / v
        return b

    def theta_mean(self, z):
        return linalg.cho_solve(self.theta_system(), self.theta_linear_term(z))

    def draw_theta(self, state, rng):
        if self.sample_theta is not None:
            return np.asarray(self.sample_theta(state, rng), dtype=float)
        chol, lower = self.theta_system()
        mean = linalg.cho_solve((chol, lower), self.theta_linear_term(state.z))
        eps = rng.standard_normal(self.theta_dim)
        return mean + linalg.solve_triangular(chol, eps, lower=lower, trans="T")

    def eval_potential(self, theta):
        if self.potential is not None:
            return float(self.potential(theta))
        total = 0.0
        for blk in self.blocks:
            if blk.potential is None:
                return math.nan
            total += float(blk.potential(apply_operator(blk.operator, theta)))
        return total


@dataclass
class ChainOutput:
    """Stored draws and traces of one Gibbs run."""

    samples: np.ndarray
    potential_trace: np.ndarray
    seed: int
    iters: int
    burnin: int
    thinning: int
    z_samples: Optional[list] = None
    final_state: Optional[GibbsState] = None

    def mean(self):
        return self.samples.mean(axis=0)

    def ess(self):
        from .diagnostics import ess
        return np.array([ess(col) for col in self.samples.T])

    def hpd_threshold(self, alpha):
        from .diagnostics import hpd_threshold
        return hpd_threshold(self.potential_trace[self.burnin:], alpha)


def _unpack(result):
    if isinstance(result, tuple):
        return np.asarray(result[0], dtype=float), result[1]
    return np.asarray(result, dtype=float), None


def initial_state(model, theta0=None):
    if theta0 is None:
        theta0 = model.theta_init
    theta = np.zeros(model.theta_dim) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    z = [apply_operator(blk.operator, theta) for blk in model.blocks]
    return GibbsState(theta=theta, z=z, latent=[None] * len(model.blocks))


def run_split_gibbs(model, iters, burnin=None, thinning=1, seed=0, parallel_blocks=False,
                    theta0=None, store_z=False, max_workers=None):
    """Run the split Gibbs sampler.

    Args:
        model: a :class:`SplitModel` whose blocks all provide ``sample_z``.
        iters: total number of iterations.
        burnin: discarded leading iterations; half of ``iters`` by default.
        thinning: keep one draw every ``thinning`` iterations after burn-in.
        seed: master seed of the counter-based streams.
        parallel_blocks: update the z-blocks in a thread pool.
        theta0: starting theta; zeros (or ``model.theta_init``) otherwise.
        store_z: also keep the retained z draws.

    Returns:
        ChainOutput
    """
    iters = int(iters)
    burnin = iters // 2 if burnin is None else int(burnin)
    thinning = int(thinning)
    if iters < 1 or not (0 <= burnin < iters) or thinning < 1:
        raise DomainError("need iters >= 1, 0 <= burnin < iters and thinning >= 1")
    for j, blk in enumerate(model.blocks):
        if blk.sample_z is None:
            raise DomainError(f"block {j} has no conditional z-sampler")

    state = initial_state(model, theta0)
    n_keep = len(range(burnin, iters, thinning))
    samples = np.empty((n_keep, model.theta_dim))
    trace = np.empty(iters)
    z_keep = [] if store_z else None
    n_blocks = len(model.blocks)

    def update_block(t, j, a_theta):
        try:
            return _unpack(model.blocks[j].sample_z(a_theta, state.z[j], stream(seed, t, j + 1)))
        except Exception as exc:
            raise BlockSamplingError(j, t, exc) from exc

    pool = ThreadPoolExecutor(max_workers=max_workers) if parallel_blocks and n_blocks > 1 else None
    try:
        keep = 0
        for t in range(iters):
            state.theta = model.draw_theta(state, stream(seed, t, 0))
            projections = [apply_operator(blk.operator, state.theta) for blk in model.blocks]
            if pool is None:
                results = [update_block(t, j, projections[j]) for j in range(n_blocks)]
            else:
                futures = [pool.submit(update_block, t, j, projections[j]) for j in range(n_blocks)]
                results = [f.result() for f in futures]
            state.z = [r[0] for r in results]
            state.latent = [r[1] for r in results]
            trace[t] = model.eval_potential(state.theta)
            if t >= burnin and (t - burnin) % thinning == 0:
                samples[keep] = state.theta
                if store_z:
                    z_keep.append([zj.copy() for zj in state.z])
                keep += 1
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    return ChainOutput(samples=samples, potential_trace=trace, seed=int(seed), iters=iters,
                       burnin=burnin, thinning=thinning, z_samples=z_keep, final_state=state)
