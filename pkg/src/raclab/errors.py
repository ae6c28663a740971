"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration or shape/argument contract violation."""


class UsageError(RuntimeError):
    """An object was used out of order (e.g. backward before forward)."""


class DivergenceError(FloatingPointError):
    """A non-finite value appeared in a loss, gradient or target."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class MetricsParseError(ValueError):
    """A metrics CSV is malformed (bad header, wrong column count, non-numeric cell)."""
