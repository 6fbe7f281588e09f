"""Interpretable lung-nodule pipeline: radiomics, classifiers, evaluation."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConradError,
    ContractError,
    ConvergenceError,
    InvalidInputError,
    OutOfBoundsError,
)

__all__ = [
    "__version__",
    "ConradError", "ConfigError", "ContractError", "ConvergenceError",
    "InvalidInputError", "OutOfBoundsError",
]
