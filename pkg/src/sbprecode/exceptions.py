"""Exception hierarchy shared by every module."""


class SbPrecodeError(Exception):
    """Base class for all package errors."""


class StructuralError(SbPrecodeError, ValueError):
    """Input has the wrong shape, size or structure (e.g. non-square, n_tx mismatch)."""


class ParameterError(SbPrecodeError, ValueError):
    """A numeric parameter is outside its valid range."""


class ConvergenceError(SbPrecodeError, RuntimeError):
    """An iterative solver did not converge within its iteration budget."""


class ConfigError(ParameterError):
    """Invalid simulation configuration. ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
