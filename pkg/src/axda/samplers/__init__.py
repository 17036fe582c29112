"""Random variates, the split Gibbs engine and chain diagnostics."""

from .diagnostics import ess, estimate_tv_mc, hpd_interval_grid, hpd_threshold, mc_standard_error
from .gibbs import (
    Block,
    ChainOutput,
    GibbsState,
    SplitModel,
    run_split_gibbs,
    stream,
)
from .variates import (
    sample_gaussian_circulant_fft,
    sample_gaussian_precision,
    sample_inverse_gaussian,
    sample_log_concave_1d,
)

__all__ = [
    "Block", "ChainOutput", "GibbsState", "SplitModel", "run_split_gibbs", "stream",
    "ess", "estimate_tv_mc", "hpd_interval_grid", "hpd_threshold", "mc_standard_error",
    "sample_gaussian_circulant_fft", "sample_gaussian_precision",
    "sample_inverse_gaussian", "sample_log_concave_1d",
]
