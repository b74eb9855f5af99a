"""Domain types shared by every module.

All array-valued fields are validated on construction and stored read-only.
Class labels are 0-based inside the package; the file formats in
``tools.io_tools`` translate them to the 1-based labels used externally.
"""
import logging
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from .errors import (
    DataValidationError,
    DimensionMismatch,
    InvalidProbabilities,
    NonBinaryEntry,
    TooFewItems,
)

logger = logging.getLogger(__name__)

ModelKind = Literal["random", "fixed"]

PROBABILITY_SUM_TOL = 1e-10


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def _as_float_array(raw: Any, name: str) -> np.ndarray:
    try:
        return np.asarray(raw, dtype=float)
    except (ValueError, TypeError) as e:
        raise DimensionMismatch(f"{name} is not a rectangular numeric array: {e}") from e


def _check_binary(arr: np.ndarray) -> None:
    if arr.ndim != 2:
        raise DimensionMismatch(f"Response data must be a matrix, got {arr.ndim} dimension(s)")
    bad = np.argwhere((arr != 0) & (arr != 1))
    if bad.size:
        row, col = (int(i) for i in bad[0])
        raise NonBinaryEntry(row, col, arr[row, col])


def response_array(R: "ResponseMatrix | np.ndarray") -> np.ndarray:
    """
    Return responses as a float N×J array.

    Accepts a validated ``ResponseMatrix`` or any binary matrix. The J >= 3
    requirement belongs to the moment method, so it is not checked here.
    """
    if isinstance(R, ResponseMatrix):
        return R.data.astype(float)
    arr = _as_float_array(R, "Response data")
    _check_binary(arr)
    return arr


class ResponseMatrix(BaseModel):
    """N×J binary observations."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def validate_data(cls, v: Any) -> np.ndarray:
        arr = _as_float_array(v, "Response data")
        if arr.ndim != 2:
            raise DimensionMismatch(f"Response data must be a matrix, got {arr.ndim} dimension(s)")
        if arr.shape[0] < 1:
            raise DataValidationError("Response matrix needs at least one subject")
        if arr.shape[1] < 3:
            raise TooFewItems(arr.shape[1])
        _check_binary(arr)
        return _frozen(arr.astype(np.int8))

    @field_serializer("data")
    def serialize_data(self, v: np.ndarray) -> list[list[int]]:
        return v.tolist()

    @property
    def n_subjects(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_items(self) -> int:
        return int(self.data.shape[1])


def validate_response_matrix(raw: Any) -> ResponseMatrix:
    """
    Validate a raw integer matrix.

    Raises:
        DimensionMismatch: If ``raw`` is not rectangular
        TooFewItems: If J < 3
        NonBinaryEntry: At the first (row, col) holding a value other than 0 or 1
    """
    return ResponseMatrix(data=raw)


class ItemParams(BaseModel):
    """J×L item parameters, ``theta[j, a]`` = P(positive response | class a)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    theta: np.ndarray

    @field_validator("theta", mode="before")
    @classmethod
    def validate_theta(cls, v: Any) -> np.ndarray:
        arr = _as_float_array(v, "Item parameters")
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.size == 0:
            raise DimensionMismatch(f"Item parameters must be a non-empty J×L matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise InvalidProbabilities("Item parameters must lie in [0, 1]")
        return _frozen(arr)

    @field_serializer("theta")
    def serialize_theta(self, v: np.ndarray) -> list[list[float]]:
        return v.tolist()

    @property
    def n_items(self) -> int:
        return int(self.theta.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.theta.shape[1])

    @property
    def is_interior(self) -> bool:
        """True when every entry lies strictly inside (0, 1)."""
        return bool(self.theta.min() > 0.0 and self.theta.max() < 1.0)

    def permute_columns(self, permutation: np.ndarray | list[int]) -> "ItemParams":
        """Return parameters whose column ``a`` is this object's column ``permutation[a]``."""
        return ItemParams(theta=self.theta[:, np.asarray(permutation, dtype=int)])


class MixingWeights(BaseModel):
    """Class proportions of a random-effect model."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    p: np.ndarray

    @field_validator("p", mode="before")
    @classmethod
    def validate_p(cls, v: Any) -> np.ndarray:
        arr = _as_float_array(v, "Mixing weights").ravel()
        if arr.size == 0:
            raise DimensionMismatch("Mixing weights must not be empty")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0:
            raise InvalidProbabilities("Mixing weights must be non-negative")
        if abs(arr.sum() - 1.0) > PROBABILITY_SUM_TOL:
            raise InvalidProbabilities(f"Mixing weights sum to {arr.sum()!r}, not 1")
        return _frozen(arr)

    @field_serializer("p")
    def serialize_p(self, v: np.ndarray) -> list[float]:
        return v.tolist()

    @property
    def n_classes(self) -> int:
        return int(self.p.size)

    @classmethod
    def uniform(cls, n_classes: int) -> "MixingWeights":
        return cls(p=np.full(n_classes, 1.0 / n_classes))

    def permute(self, permutation: np.ndarray | list[int]) -> "MixingWeights":
        return MixingWeights(p=self.p[np.asarray(permutation, dtype=int)])


class LatentAssignment(BaseModel):
    """Hard class assignment of N subjects, stored as 0-based labels."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    labels: np.ndarray
    n_classes: int = Field(ge=1)

    @field_validator("labels", mode="before")
    @classmethod
    def validate_labels(cls, v: Any) -> np.ndarray:
        arr = _as_float_array(v, "Class labels").ravel()
        if arr.size and not np.all(arr == np.round(arr)):
            raise DataValidationError("Class labels must be integers")
        return _frozen(arr.astype(np.int64))

    @model_validator(mode="after")
    def check_range(self) -> "LatentAssignment":
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DataValidationError(f"Class labels must lie in 1..{self.n_classes}")
        return self

    @field_serializer("labels")
    def serialize_labels(self, v: np.ndarray) -> list[int]:
        return v.tolist()

    @classmethod
    def from_one_based(cls, labels: Any, n_classes: int | None = None) -> "LatentAssignment":
        arr = np.asarray(labels, dtype=np.int64).ravel()
        if n_classes is None:
            n_classes = int(arr.max()) if arr.size else 1
        return cls(labels=arr - 1, n_classes=n_classes)

    @property
    def n_subjects(self) -> int:
        return int(self.labels.size)

    def one_based(self) -> np.ndarray:
        return self.labels + 1

    def one_hot(self) -> np.ndarray:
        """N×L indicator matrix **Z** with exactly one 1 per row."""
        Z = np.zeros((self.n_subjects, self.n_classes), dtype=np.int8)
        Z[np.arange(self.n_subjects), self.labels] = 1
        return Z


class FitResult(BaseModel):
    """Outcome of a single estimation run."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    theta_hat: ItemParams
    p_hat: MixingWeights | None = None
    z_hat: LatentAssignment | None = None
    loglik: float
    n_iterations: int = Field(ge=0)
    converged: bool
    runtime_ms: float = Field(ge=0.0)
    method: str = ""
    loglik_trace: list[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_membership(self) -> "FitResult":
        if (self.p_hat is None) == (self.z_hat is None):
            raise DataValidationError("A fit carries exactly one of p_hat (random) or z_hat (fixed)")
        return self

    @property
    def model(self) -> ModelKind:
        return "random" if self.p_hat is not None else "fixed"

    @property
    def n_classes(self) -> int:
        return self.theta_hat.n_classes
