"""Core domain package."""
from .errors import LCMError
from .types import (
    FitResult,
    ItemParams,
    LatentAssignment,
    MixingWeights,
    ModelKind,
    ResponseMatrix,
    response_array,
    validate_response_matrix,
)

__all__ = [
    "LCMError",
    "FitResult",
    "ItemParams",
    "LatentAssignment",
    "MixingWeights",
    "ModelKind",
    "ResponseMatrix",
    "response_array",
    "validate_response_matrix",
]
