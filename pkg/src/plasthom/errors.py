"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid input data: bad dimensions, parameter ranges, or run configs."""


class NumericalError(RuntimeError):
    """A solver failed to converge or a numerical budget was exceeded.

    Carries optional diagnostics so callers can report where the failure
    happened (time step, residual, partial results).
    """

    def __init__(self, message, step=None, residual=None, partial=None):
        super().__init__(message)
        self.step = step
        self.residual = residual
        self.partial = partial
