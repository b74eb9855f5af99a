"""Selecting the number of classes with the generalized information criterion.

GIC(L) = −2·loglik + a_N·dim, with a_N = log N (GIC1, the BIC choice) or
log(log N)·log N (GIC2, for parameter dimensions growing with N).
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import pandas as pd

from config.settings import Settings
from core.errors import DomainError, LCMError
from core.types import FitResult, ModelKind, ResponseMatrix
from utils.random import RandomSource, spawn
from .pipeline import TensorEMMethod

logger = logging.getLogger(__name__)

Criterion = Literal["gic1", "gic2"]
CRITERIA: tuple[Criterion, ...] = ("gic1", "gic2")
TIE_TOL = 1e-12
SMALL_WEIGHT = 0.001


def model_dim(model: ModelKind, N: int, J: int, L: int) -> int:
    """JL + L − 1 free parameters (random effects) or JL + N (fixed effects)."""
    if model == "random":
        return J * L + L - 1
    if model == "fixed":
        return J * L + N
    raise DomainError(f"Unknown model kind {model!r}")


def penalty(kind: Criterion, N: int) -> float:
    """a_N for the chosen criterion, natural logarithms."""
    if kind == "gic1":
        if N < 1:
            raise DomainError(f"GIC1 needs N >= 1, got {N}")
        return math.log(N)
    if kind == "gic2":
        if N < 3:
            raise DomainError(f"GIC2 needs N >= 3 so that log(log N) > 0, got {N}")
        return math.log(math.log(N)) * math.log(N)
    raise DomainError(f"Unknown criterion {kind!r}")


@dataclass(frozen=True)
class GicRow:
    """One candidate L; GIC fields are NaN when the fit failed."""

    n_classes: int
    loglik: float
    dim: int
    a_n: float
    gic1: float
    gic2: float
    converged: bool = False
    n_iterations: int = 0
    small_weight_classes: int | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class GicReport:
    """Per-candidate GIC values and the argmin under each criterion."""

    rows: list[GicRow]
    criterion: Criterion
    model: ModelKind
    n_subjects: int
    selected: dict[str, int | None] = field(default_factory=dict)

    @property
    def selected_L(self) -> int | None:
        return self.selected.get(self.criterion)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([
            {
                "L": row.n_classes,
                "loglik": row.loglik,
                "dim": row.dim,
                "a_N": row.a_n,
                "gic1": row.gic1,
                "gic2": row.gic2,
                "converged": row.converged,
                "iterations": row.n_iterations,
                "small_weight_classes": row.small_weight_classes,
                "error": row.error or "",
            }
            for row in self.rows
        ])
        frame["selected"] = frame["L"] == self.selected_L
        return frame


def argmin_criterion(rows: list[GicRow], column: Criterion) -> int | None:
    """Smallest criterion value; values within 1e-12 count as tied and go to the smaller L."""
    best: GicRow | None = None
    for row in sorted(rows, key=lambda r: r.n_classes):
        if row.failed:
            continue
        if best is None or getattr(row, column) < getattr(best, column) - TIE_TOL:
            best = row
    return None if best is None else best.n_classes


def _penalty_or_nan(kind: Criterion, N: int) -> float:
    try:
        return penalty(kind, N)
    except DomainError:
        return float("nan")


def _row(fit: FitResult, model: ModelKind, N: int, J: int, criterion: Criterion) -> GicRow:
    L = fit.n_classes
    dim = model_dim(model, N, J, L)
    small = int(np.sum(fit.p_hat.p < SMALL_WEIGHT)) if fit.p_hat is not None else None
    return GicRow(
        n_classes=L,
        loglik=fit.loglik,
        dim=dim,
        a_n=penalty(criterion, N),
        gic1=-2.0 * fit.loglik + penalty("gic1", N) * dim,
        gic2=-2.0 * fit.loglik + _penalty_or_nan("gic2", N) * dim,
        converged=fit.converged,
        n_iterations=fit.n_iterations,
        small_weight_classes=small,
    )


def select_L(
    R: ResponseMatrix,
    candidates: list[int],
    model: ModelKind = "random",
    criterion: Criterion = "gic1",
    settings: Settings | None = None,
    rng: RandomSource = None,
    n_jobs: int | None = None,
) -> GicReport:
    """
    Fit tensor-EM for every candidate L and report GIC1/GIC2.

    A candidate whose fit raises is flagged in its row and left out of the
    argmin; the scan continues. Each candidate consumes its own substream.
    """
    settings = settings or Settings()
    candidates = sorted(set(int(c) for c in candidates))
    if not candidates or candidates[0] < 1:
        raise DomainError("Candidates must be a non-empty set of positive class counts")
    if criterion not in CRITERIA:
        raise DomainError(f"Unknown criterion {criterion!r}")
    N, J = R.n_subjects, R.n_items
    penalty(criterion, N)
    streams = spawn(rng, len(candidates))
    method = TensorEMMethod(model, settings)

    def run(L: int, stream: np.random.Generator) -> GicRow:
        try:
            return _row(method.fit(R, L, stream), model, N, J, criterion)
        except LCMError as e:
            logger.warning(f"Candidate L={L} failed: {e}")
            return GicRow(n_classes=L, loglik=float("nan"), dim=model_dim(model, N, J, L),
                          a_n=penalty(criterion, N), gic1=float("nan"), gic2=float("nan"),
                          error=f"{type(e).__name__}: {e}")

    workers = n_jobs or settings.selection.n_jobs
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(run, candidates, streams))

    selected = {c: argmin_criterion(rows, c) for c in CRITERIA}
    logger.info(f"GIC scan over L={candidates}: selected {selected}")
    return GicReport(rows=rows, criterion=criterion, model=model, n_subjects=N, selected=selected)
