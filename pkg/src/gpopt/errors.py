"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Input length or column count does not match the expected dimension."""


class DataError(ValueError):
    """Training data contains NaN/inf or is otherwise unusable."""


class NotPositiveDefiniteError(ArithmeticError):
    """Cholesky factorization failed even after jitter escalation."""


class InitializationError(RuntimeError):
    """A sampler could not start from a finite log density."""


class SamplingError(RuntimeError):
    pass


class ScoringError(ValueError):
    """An acquisition score came back NaN."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ConfigurationError(ValueError):
    pass


class EvaluationError(RuntimeError):
    """The objective returned a non-finite value."""

    def __init__(self, message, x=None, history=None):
        super().__init__(message)
        self.x = x
        self.history = history
