"""Deterministic inference on split models: quadratic penalty and Monte-Carlo EM."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator

from .exceptions import DomainError
from .kernels import KernelFamily
from .samplers.gibbs import apply_adjoint, apply_operator, coupling_variance, stream


def _dense(op, d):
    if isinstance(op, LinearOperator):
        return np.asarray(op @ np.eye(d))
    return np.asarray(op, dtype=float)


@dataclass
class PenaltyProblem:
    """Minimize ``q(theta) + sum_j f_j(z_j) + ||A_j theta - z_j||^2 / (2 rho_j^2)``.

    ``q(theta) = theta^T P theta / 2 - b^T theta + offset`` is an optional
    quadratic term acting on ``theta`` alone (e.g. a Gaussian likelihood).

    Attributes:
        operators: the ``A_j``.
        potentials: ``z -> f_j(z)``.
        minimizers: ``(a, rho) -> argmin_z f_j(z) + ||a - z||^2 / (2 rho^2)``.
        rho: per-block tolerances.
        theta_precision, theta_linear, offset: the quadratic term ``q``.
    """

    operators: list
    potentials: List[Callable]
    minimizers: List[Callable]
    rho: Sequence[float]
    theta_dim: int
    theta_precision: Optional[np.ndarray] = None
    theta_linear: Optional[np.ndarray] = None
    offset: float = 0.0

    def __post_init__(self):
        d = self.theta_dim
        if not (len(self.operators) == len(self.potentials) == len(self.minimizers) == len(self.rho)):
            raise DomainError("one operator, potential, minimizer and rho per block")
        if self.theta_precision is None:
            self.theta_precision = np.zeros((d, d))
        if self.theta_linear is None:
            self.theta_linear = np.zeros(d)
        self.rho = [float(r) for r in self.rho]
        q = np.array(self.theta_precision, dtype=float, copy=True)
        for op, r in zip(self.operators, self.rho):
            a = _dense(op, d)
            q += a.T @ a / r ** 2
        try:
            self._chol = linalg.cho_factor(q, lower=True)
        except linalg.LinAlgError as exc:
            raise DomainError("the theta least-squares system is singular") from exc

    @classmethod
    def from_split_model(cls, model, offset=0.0):
        """Build the penalty problem of a split model with Gaussian couplings."""
        rho = []
        for j, blk in enumerate(model.blocks):
            if blk.smoothing.source is not KernelFamily.GAUSSIAN:
                raise DomainError("the quadratic penalty needs Gaussian kernel smoothing")
            if blk.minimize_z is None or blk.potential is None:
                raise DomainError(f"block {j} needs a potential and an exact minimizer")
            rho.append(np.sqrt(coupling_variance(blk.smoothing)))
        return cls(
            operators=[blk.operator for blk in model.blocks],
            potentials=[blk.potential for blk in model.blocks],
            minimizers=[blk.minimize_z for blk in model.blocks],
            rho=rho,
            theta_dim=model.theta_dim,
            theta_precision=model.theta_precision,
            theta_linear=model.theta_linear,
            offset=offset,
        )

    def with_rho(self, rho):
        rho = [float(rho)] * len(self.operators) if np.isscalar(rho) else list(rho)
        return replace(self, rho=rho)

    def theta_step(self, z):
        b = np.array(self.theta_linear, dtype=float, copy=True)
        for op, zj, r in zip(self.operators, z, self.rho):
            b += apply_adjoint(op, zj) / r ** 2
        return linalg.cho_solve(self._chol, b)

    def z_step(self, theta, pool=None):
        args = [(apply_operator(op, theta), r) for op, r in zip(self.operators, self.rho)]
        if pool is None:
            return [np.atleast_1d(np.asarray(f(a, r), dtype=float))
                    for f, (a, r) in zip(self.minimizers, args)]
        futures = [pool.submit(f, a, r) for f, (a, r) in zip(self.minimizers, args)]
        return [np.atleast_1d(np.asarray(fut.result(), dtype=float)) for fut in futures]

    def objective(self, theta, z):
        val = 0.5 * theta @ self.theta_precision @ theta - self.theta_linear @ theta + self.offset
        for op, f, zj, r in zip(self.operators, self.potentials, z, self.rho):
            res = apply_operator(op, theta) - zj
            val += float(f(zj)) + float(res @ res) / (2.0 * r ** 2)
        return float(val)


class PenaltyResult(NamedTuple):
    theta: np.ndarray
    z: list
    objective_trace: np.ndarray


def _alternate(problem, theta, max_outer, tol, pool):
    z = problem.z_step(theta, pool)
    trace = [problem.objective(theta, z)]
    for _ in range(max_outer):
        theta_new = problem.theta_step(z)
        z_new = problem.z_step(theta_new, pool)
        value = problem.objective(theta_new, z_new)
        if value > trace[-1]:
            # only rounding can raise an exact block minimization; keep the better iterate
            break
        decrease = trace[-1] - value
        theta, z = theta_new, z_new
        trace.append(value)
        if decrease < tol:
            break
    return theta, z, np.array(trace)


def quadratic_penalty_minimize(problem, max_outer=500, tol=1e-10, theta0=None,
                               continuation=None, parallel_blocks=False):
    """Alternating exact minimization of the quadratically penalized objective.

    Args:
        problem: a :class:`PenaltyProblem`.
        max_outer: maximum number of (theta, z) sweeps per tolerance level.
        tol: stop when the objective decreases by less than ``tol``.
        theta0: starting point, zeros by default.
        continuation: optional decreasing sequence of tolerances ending at the
            target one; each level is warm-started from the previous solution.
            The returned trace covers the final level only.
        parallel_blocks: run the z-minimizations in a thread pool.

    Returns:
        PenaltyResult(theta, z, objective_trace) with a non-increasing trace.
    """
    theta = np.zeros(problem.theta_dim) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    levels = [problem] if continuation is None else [problem.with_rho(r) for r in continuation]
    pool = ThreadPoolExecutor() if parallel_blocks and len(problem.operators) > 1 else None
    try:
        for level in levels:
            theta, z, trace = _alternate(level, theta, max_outer, tol, pool)
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    return PenaltyResult(theta=theta, z=z, objective_trace=trace)


def _estep_block(blk, a, n_mc, rng):
    if n_mc is None:
        return np.atleast_1d(np.asarray(blk.conditional_mean(a), dtype=float))
    if blk.sample_many is not None:
        return np.asarray(blk.sample_many(a, n_mc, rng), dtype=float).mean(axis=0)
    draws = []
    z = np.asarray(a, dtype=float).copy()
    for _ in range(n_mc):
        out = blk.sample_z(a, z, rng)
        z = np.asarray(out[0] if isinstance(out, tuple) else out, dtype=float)
        draws.append(z)
    return np.mean(draws, axis=0)


def mcem_run(model, theta0, n_mc_per_estep, max_iters, seed=0, parallel_blocks=False):
    """Monte-Carlo EM for the theta-marginal mode of a Gaussian-coupled split model.

    The E-step averages ``n_mc_per_estep`` conditional draws of each block
    (exact conditional means when it is None); the M-step solves the ridge
    least-squares problem of the theta conditional. Block draws use the same
    counter-based streams as the Gibbs sampler.

    Returns:
        array of shape (max_iters + 1, d) holding the theta iterates.
    """
    for j, blk in enumerate(model.blocks):
        if coupling_variance(blk.smoothing) is None:
            raise DomainError("MCEM needs Gaussian smoothing in every block")
        if n_mc_per_estep is None and blk.conditional_mean is None:
            raise DomainError(f"block {j} has no exact conditional mean")
    model.theta_system()
    n_mc = None if n_mc_per_estep is None else int(n_mc_per_estep)
    theta = np.asarray(theta0, dtype=float).copy()
    thetas = [theta.copy()]
    pool = ThreadPoolExecutor() if parallel_blocks and len(model.blocks) > 1 else None
    try:
        for t in range(int(max_iters)):
            args = [(blk, apply_operator(blk.operator, theta), n_mc, stream(seed, t, j + 1))
                    for j, blk in enumerate(model.blocks)]
            if pool is None:
                z_hat = [_estep_block(*a) for a in args]
            else:
                z_hat = [f.result() for f in [pool.submit(_estep_block, *a) for a in args]]
            theta = model.theta_mean(z_hat)
            thetas.append(theta.copy())
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    return np.array(thetas)
