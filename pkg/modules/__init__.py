"""Modules package: moment estimation, tensor decomposition, EM and model selection."""
from .base import BaseMethod
from .pipeline import (
    METHOD_NAMES,
    EMInitMethod,
    EMRandomMethod,
    TensorEMMethod,
    TensorMethod,
    build_method,
    fit_response_matrix,
)
from .selection import GicReport, select_L

__all__ = [
    "BaseMethod",
    "METHOD_NAMES",
    "EMInitMethod",
    "EMRandomMethod",
    "TensorEMMethod",
    "TensorMethod",
    "build_method",
    "fit_response_matrix",
    "GicReport",
    "select_L",
]
