"""Estimation, testing and simulation of long memory in multivariate time series."""

__version__ = "0.1.0"

from .errors import DegenerateCovarianceError, LongMemError, ValidationError
from .gse import GseConfig, GseFit, estimate, gph_estimate, objective, gradient
from .inference import TestResult, omega, total_memory, total_memory_test, wald_test
from .spectral import Periodogram, dft, periodogram

__all__ = [
    "DegenerateCovarianceError",
    "LongMemError",
    "ValidationError",
    "GseConfig",
    "GseFit",
    "estimate",
    "gph_estimate",
    "objective",
    "gradient",
    "TestResult",
    "omega",
    "total_memory",
    "total_memory_test",
    "wald_test",
    "Periodogram",
    "dft",
    "periodogram",
]
