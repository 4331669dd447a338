"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`IRSLabError`.
The ``ConfigError`` branch marks problems with user-supplied configuration
(the CLI maps it to exit code 1); everything else is a runtime failure.
"""


class IRSLabError(Exception):
    """Base class for all package errors."""


class ConfigError(IRSLabError, ValueError):
    """Invalid scenario, sweep or command-line configuration."""


class MatrixError(IRSLabError, ValueError):
    """A matrix kernel precondition failed."""


class NotHermitianError(MatrixError):
    pass


class NotPositiveDefiniteError(MatrixError):
    pass


class SingularMatrixError(MatrixError):
    pass


class DofPremiseError(ConfigError):
    """Rank premises of a DoF bound are violated (never silently clamped)."""


class DofBoundViolation(IRSLabError, AssertionError):
    """A realized effective channel exceeded its DoF upper bound."""


class NoVisibleSolutionError(ConfigError):
    """The orthogonality condition has no solution in the visible region."""


class InfeasibleConfigurationError(IRSLabError):
    """A beamformer has no feasible solution (e.g. an empty null space)."""
