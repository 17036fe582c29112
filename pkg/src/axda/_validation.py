"""Small input-validation helpers."""

import numbers

import numpy as np

from .exceptions import DomainError


def as_vector(x, name="x", dim=None):
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DomainError(f"{name} has length {arr.shape[0]}, expected {dim}")
    return arr


def check_positive(value, name, allow_zero=False, allow_inf=False):
    if not isinstance(value, numbers.Real) or np.isnan(value):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    if np.isinf(value) and not allow_inf:
        raise DomainError(f"{name} must be finite")
    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise DomainError(f"{name} must be {bound}, got {value}")
    return float(value)


def check_probability(alpha, name="alpha"):
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"{name} must lie in (0, 1), got {alpha}")
    return float(alpha)


def check_dim(d, name="d"):
    if isinstance(d, bool) or not isinstance(d, numbers.Integral) or d < 1:
        raise DomainError(f"{name} must be a positive integer, got {d!r}")
    return int(d)
