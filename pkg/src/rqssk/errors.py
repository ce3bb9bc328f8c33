"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A parameter is outside its allowed domain.

    ``param`` names the offending field so callers (and the CLI) can
    report it without parsing the message.
    """

    def __init__(self, param, message):
        super().__init__(f"{param}: {message}")
        self.param = param


class DimensionError(ValueError):
    pass


class MappingError(ValueError):
    pass


class SolverError(RuntimeError):
    """Root bracketing failed where the convexity argument says it cannot."""


class NumericalError(RuntimeError):
    """A quadrature did not meet its convergence check.

    Carries the best estimate and the error bound that was achieved.
    """

    def __init__(self, message, estimate=None, bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.bound = bound
