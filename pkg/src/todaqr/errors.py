import numpy as np


class TodaQRError(Exception):
    """Base class for library errors."""


class DomainError(TodaQRError, ValueError):
    """Input outside the domain of an operation (e.g. log of a negative eigenvalue)."""


class RangeError(DomainError, OverflowError):
    pass


class SingularMatrixError(TodaQRError, np.linalg.LinAlgError):
    pass


class ConvergenceError(TodaQRError, RuntimeError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history


class NonHaltingError(TodaQRError, RuntimeError):
    """An iteration or flow hit its cap before deflating.

    ``profile`` holds the off-diagonal block norms at the last iterate.
    """

    def __init__(self, message, steps=None, profile=None):
        super().__init__(message)
        self.steps = steps
        self.profile = profile


class UnsupportedSizeError(TodaQRError, ValueError):
    pass


class PermutationError(TodaQRError, ValueError):
    pass


class RepresentationError(TodaQRError, ArithmeticError):
    """A determinant expected to be real came out with a sizeable imaginary part."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class DegenerateSampleError(TodaQRError, ValueError):
    pass


class ConfigError(TodaQRError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
