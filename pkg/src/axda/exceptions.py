"""Exception hierarchy shared by every module of the package."""


class AXDAError(Exception):
    """Base class for all errors raised by :mod:`axda`."""


class DomainError(AXDAError, ValueError):
    """An argument lies outside the set where the operation is defined."""


class PreconditionError(AXDAError, ValueError):
    """A required input (e.g. a regularity constant) is missing."""


class UnsupportedError(AXDAError, NotImplementedError):
    """The requested configuration is valid but not supported."""


class ConvergenceError(AXDAError, RuntimeError):
    """An iterative routine failed to converge."""


class NumericError(AXDAError, ArithmeticError):
    """A numerical factorization or evaluation failed."""


class ConfigError(AXDAError, ValueError):
    """An experiment configuration is invalid."""


class FormatError(AXDAError, ValueError):
    """An input file is not in the expected format."""


class BlockSamplingError(AXDAError, RuntimeError):
    """A block sampler failed inside a Gibbs sweep.

    Carries the block index and the iteration at which the failure occurred.
    """

    def __init__(self, block, iteration, cause):
        self.block = block
        self.iteration = iteration
        self.cause = cause
        super().__init__(f"block {block} failed at iteration {iteration}: {cause!r}")
