"""Exception hierarchy shared across the package."""


class MeibError(Exception):
    """Base class for all package errors."""


class DimensionError(MeibError, ValueError):
    """Shapes of inputs are incompatible."""


class NumericError(MeibError, ArithmeticError):
    """Non-finite values, failed convergence, or a matrix outside its domain."""


class NotPSDError(NumericError):
    """A matrix expected to be positive semidefinite has a negative eigenvalue."""


class ParameterError(MeibError, ValueError):
    """A scalar parameter is outside its valid range."""


class InsufficientSamplesError(MeibError, ValueError):
    """Too few samples for the requested estimate."""


class ConfigError(MeibError, ValueError):
    """Experiment or model configuration is invalid."""
