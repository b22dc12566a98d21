"""Toda flows, shiftless QR deflation and the random-matrix statistics around them."""
from ._accel import backend
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateSampleError,
    DomainError,
    NonHaltingError,
    PermutationError,
    RangeError,
    RepresentationError,
    SingularMatrixError,
    TodaQRError,
    UnsupportedSizeError,
)

__version__ = "0.1.0"

__all__ = [
    "backend",
    "ConfigError",
    "ConvergenceError",
    "DegenerateSampleError",
    "DomainError",
    "NonHaltingError",
    "PermutationError",
    "RangeError",
    "RepresentationError",
    "SingularMatrixError",
    "TodaQRError",
    "UnsupportedSizeError",
    "__version__",
]
