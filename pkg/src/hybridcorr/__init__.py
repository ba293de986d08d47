"""Nonclassical correlations in oscillator-qubit hybrid systems."""
from .errors import (
    AccuracyError,
    AmplitudeTooLargeError,
    ConvergenceError,
    DimensionError,
    HybridCorrError,
    NotDensityError,
    UndefinedConditionalError,
    ValidationError,
)
from .fock import FockConfig, HybridOperator, HybridVector
from .states import CatParams, dephased_cat

__all__ = [
    "AccuracyError",
    "AmplitudeTooLargeError",
    "CatParams",
    "ConvergenceError",
    "DimensionError",
    "FockConfig",
    "HybridCorrError",
    "HybridOperator",
    "HybridVector",
    "NotDensityError",
    "UndefinedConditionalError",
    "ValidationError",
    "dephased_cat",
]
