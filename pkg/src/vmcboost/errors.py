"""Exception types raised by the converter library."""


class ConfigurationError(ValueError):
    """A parameter is missing, out of range or inconsistent."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class UnsupportedRegionError(ConfigurationError):
    """The requested operating point lies outside three-mode operation."""


class InfeasibleTargetError(ConfigurationError):
    """A design target cannot be reached in three-mode operation."""


class NumericalError(RuntimeError):
    """The simulation produced a non-finite state."""

    def __init__(self, message, mode=None, time=None):
        super().__init__(message)
        self.mode = mode
        self.time = time


class PreconditionError(ValueError):
    """An input violates the precondition of an operation."""
