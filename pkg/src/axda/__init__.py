"""Asymptotically exact data augmentation: smoothing densities, bounds and split samplers."""

from .bounds import (
    BoundReport,
    RegularityProfile,
    bound_report,
    bregman_bias_leading,
    coverage_interval,
    log_parabolic_cylinder,
    potential_gap_bounds,
    tv_bound_lipschitz,
    tv_bound_smooth_convex,
    wasserstein_bound,
)
from .exceptions import (
    AXDAError,
    BlockSamplingError,
    ConfigError,
    ConvergenceError,
    DomainError,
    FormatError,
    NumericError,
    PreconditionError,
    UnsupportedError,
)
from .kernels import (
    DivergenceFamily,
    KernelFamily,
    SmoothingDensity,
    eval_bregman,
    eval_log_kappa,
    kernel_moment,
    sample_kappa,
)

__version__ = "0.1.0"
