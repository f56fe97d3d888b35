"""Exception hierarchy shared by every module of the package."""


class MimoPrecError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MimoPrecError, ValueError):
    """A parameter or configuration violates a stated constraint.

    ``field`` names the offending parameter when one can be identified.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DomainError(MimoPrecError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericError(MimoPrecError, ArithmeticError):
    """A numerical routine failed (e.g. non-convergent decomposition)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SingularChannelError(NumericError):
    """A Gram or composite matrix is too ill-conditioned to invert."""


class InsufficientDataError(MimoPrecError):
    """Too few usable points to fit a slope."""

    def __init__(self, message, usable=()):
        super().__init__(message)
        self.usable = list(usable)


class InfeasibleCheckError(ConfigurationError):
    """A Monte Carlo check was requested in a regime that is not reachable."""
