"""Exception types shared across the package."""


class GliderAssimError(Exception):
    """Base class for all package errors."""


class SingularFlowError(GliderAssimError):
    """Flow Jacobian is singular where an inverse is required."""


class EmptyCohortError(GliderAssimError):
    """An operation was asked to act on zero gliders."""


class InnovationSingularError(GliderAssimError):
    """Innovation matrix H P H^T + R is numerically singular."""


class SingularPriorError(GliderAssimError):
    """Prior covariance is not invertible in an information-form solve."""


class ConfigError(GliderAssimError):
    """Invalid experiment configuration; ``field`` names the offender."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class NumericalAbort(GliderAssimError):
    """Non-finite values appeared mid-run; ``window`` indexes the failure."""

    def __init__(self, window, detail):
        super().__init__(f"numerical abort in window {window}: {detail}")
        self.window = window
