"""Exception types shared across the package.

The command line maps ConfigurationError to exit code 2 and per-cell
failures (any other exception raised while running one experiment cell)
to exit code 3.
"""


class ConfigurationError(ValueError):
    """A spec or config value is invalid. Messages name the offending field."""


class InputError(ValueError):
    """An operation received data that violates its contract."""


class UsageError(RuntimeError):
    """An operation was called on an object in the wrong mode or state."""


class TrainingError(RuntimeError):
    """Training diverged or otherwise failed; the message names the epoch."""


class IntervalExhausted(RuntimeError):
    """A confidence interval contains no pool examples at all."""
