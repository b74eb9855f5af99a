"""File formats: response CSV, truth/fit JSON and tabular reports.

Responses are headerless comma-separated 0/1 rows. θ is written row-major
(J rows of L values). Class labels are 1-based on disk. JSON floats use the
shortest round-trip representation, so nothing is lost between commands.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from core.errors import DataValidationError, DimensionMismatch, LCMError
from core.types import FitResult, ItemParams, LatentAssignment, MixingWeights, ModelKind, ResponseMatrix
from core.types import validate_response_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ParameterFile:
    """θ plus p (random model) or z (fixed model) read from a truth or fit JSON."""

    model: ModelKind
    theta: ItemParams
    p: MixingWeights | None = None
    z: LatentAssignment | None = None
    seed: int | None = None
    method: str | None = None

    @property
    def n_classes(self) -> int:
        return self.theta.n_classes


def _ensure_parent(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def read_responses(path: str | Path) -> ResponseMatrix:
    """Load a headerless 0/1 CSV into a validated ``ResponseMatrix``."""
    logger.info(f"[IO] read_responses('{path}')")
    try:
        frame = pd.read_csv(path, header=None, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise DataValidationError(f"{path}: empty response file") from e
    except pd.errors.ParserError as e:
        raise DimensionMismatch(f"{path}: rows have different lengths ({e})") from e
    values = frame.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    R = validate_response_matrix(values)
    logger.debug(f"  N={R.n_subjects}, J={R.n_items}")
    return R


def write_responses(R: ResponseMatrix, path: str | Path) -> None:
    pd.DataFrame(R.data).to_csv(_ensure_parent(path), header=False, index=False, lineterminator="\n")
    logger.info(f"[IO] wrote {R.n_subjects}x{R.n_items} responses to {path}")


def write_json(payload: dict[str, Any], path: str | Path) -> None:
    _ensure_parent(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    logger.info(f"[IO] wrote {path}")


def _membership_payload(p: MixingWeights | None, z: LatentAssignment | None) -> dict[str, Any]:
    if p is not None:
        return {"p": p.p.tolist()}
    return {"z": z.one_based().tolist()}


def truth_payload(model: ModelKind, theta: ItemParams, p: MixingWeights | None,
                  z: LatentAssignment | None, seed: int | None) -> dict[str, Any]:
    """Truth JSON: {"model", "p" or "z", "theta", "seed"}."""
    return {"model": model, **_membership_payload(p, z), "theta": theta.theta.tolist(), "seed": seed}


def fit_payload(fit: FitResult, record_timing: bool = True) -> dict[str, Any]:
    """Fit JSON: {"p" or "z", "theta", "loglik", "iterations", "converged", "runtime_ms", "method"}."""
    return {
        **_membership_payload(fit.p_hat, fit.z_hat),
        "theta": fit.theta_hat.theta.tolist(),
        "loglik": fit.loglik,
        "iterations": fit.n_iterations,
        "converged": fit.converged,
        "runtime_ms": fit.runtime_ms if record_timing else 0.0,
        "method": fit.method,
    }


def read_parameters(path: str | Path) -> ParameterFile:
    """
    Read a truth or fit JSON.

    The model kind comes from the ``model`` field when present, otherwise
    from which of ``p``/``z`` the file carries.
    """
    logger.info(f"[IO] read_parameters('{path}')")
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataValidationError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(raw, dict) or "theta" not in raw:
        raise DataValidationError(f"{path}: missing field 'theta'")
    if ("p" in raw) == ("z" in raw):
        raise DataValidationError(f"{path}: exactly one of 'p' or 'z' is required")

    try:
        theta = ItemParams(theta=raw["theta"])
        if "p" in raw:
            p, z = MixingWeights(p=raw["p"]), None
        else:
            p, z = None, LatentAssignment.from_one_based(raw["z"], theta.n_classes)
    except LCMError:
        raise
    except ValueError as e:
        raise DataValidationError(f"{path}: {e}") from e

    model = raw.get("model") or ("random" if p is not None else "fixed")
    if model not in ("random", "fixed"):
        raise DataValidationError(f"{path}: unknown model {model!r}")
    if p is not None and p.n_classes != theta.n_classes:
        raise DimensionMismatch(f"{path}: p has {p.n_classes} classes, theta has {theta.n_classes}")
    return ParameterFile(model=model, theta=theta, p=p, z=z, seed=raw.get("seed"), method=raw.get("method"))


def write_table(frame: pd.DataFrame, path: str | Path) -> None:
    """Write a report (GIC scan, benchmark, profile grid) as CSV with a header."""
    frame.to_csv(_ensure_parent(path), index=False, lineterminator="\n")
    logger.info(f"[IO] wrote {len(frame)} rows to {path}")


def read_integer_table(path: str | Path, has_header: bool = False) -> np.ndarray:
    """Read a rectangular CSV of integers (raw survey answers)."""
    logger.info(f"[IO] read_integer_table('{path}')")
    try:
        frame = pd.read_csv(path, header=0 if has_header else None, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise DataValidationError(f"{path}: empty file") from e
    except pd.errors.ParserError as e:
        raise DimensionMismatch(f"{path}: rows have different lengths ({e})") from e
    values = frame.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    bad = np.argwhere(~np.isfinite(values) | (values != np.round(values)))
    if bad.size:
        row, col = (int(i) for i in bad[0])
        raise DataValidationError(f"{path}: non-integer value at row {row + 1}, column {col + 1}")
    return values.astype(np.int64)
