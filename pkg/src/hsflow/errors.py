"""Exception types raised across the package."""


class HsflowError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(HsflowError):
    """A matrix (or a scalar volume factor) that must be positive is not."""


class ConstraintViolated(HsflowError):
    """Inputs violate the algebraic constraints an operation relies on."""


class GridMismatch(HsflowError):
    """Fields live on incompatible grids or have the wrong number of samples."""


class NotAFrame(HsflowError):
    """The constant parts of a triple are linearly dependent."""


class UnstableStep(HsflowError):
    """A time step produced non-finite values."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NonMonotone(HsflowError):
    """A reparametrization that should be strictly increasing is not."""


class ConfigError(HsflowError):
    """Malformed or unknown entry in a configuration file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
