"""Simulation designs, data generators and the method-comparison benchmark."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config.settings import Settings
from core.errors import DataValidationError, DimensionMismatch, LCMError
from core.types import ItemParams, LatentAssignment, MixingWeights, ModelKind, ResponseMatrix
from utils.random import RandomSource, make_rng, spawn
from .evaluation import error_rate, mse
from .pipeline import METHOD_NAMES, build_method, normalize_method_name
from .selection import select_L

logger = logging.getLogger(__name__)

STRONG_POOL = (0.1, 0.2, 0.8, 0.9)
WEAK_POOL = (0.2, 0.4, 0.6, 0.8)
BENCHMARK_COLUMNS = ["setting_id", "method", "rep", "mse", "loglik", "runtime_ms", "error_rate", "converged", "error"]


def default_p_floor(n_classes: int) -> float:
    """Minimum class proportion: 0.1 up to five classes, 0.08 up to ten."""
    if n_classes <= 5:
        return 0.1
    return min(0.08, 0.8 / n_classes)


class SimDesign(BaseModel):
    """One simulation setting."""

    model_config = ConfigDict(frozen=True)

    n_subjects: int = Field(ge=1)
    n_items: int = Field(ge=3)
    n_classes: int = Field(ge=1)
    theta_pool: tuple[float, ...] = STRONG_POOL
    model: ModelKind = "random"
    p_floor: float | None = Field(default=None, ge=0.0)
    seed: int = 0

    @field_validator("theta_pool")
    @classmethod
    def validate_pool(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not v or min(v) < 0.0 or max(v) > 1.0:
            raise ValueError("theta_pool must be a non-empty set of probabilities")
        return tuple(float(x) for x in v)

    @model_validator(mode="after")
    def check_design(self) -> "SimDesign":
        if self.p_floor is None:
            object.__setattr__(self, "p_floor", default_p_floor(self.n_classes))
        if self.n_subjects < self.n_classes:
            raise ValueError(f"N={self.n_subjects} is smaller than L={self.n_classes}")
        if self.p_floor * self.n_classes > 1.0:
            raise ValueError(f"p_floor={self.p_floor} is infeasible for L={self.n_classes}")
        return self

    @property
    def setting_id(self) -> str:
        pool = "_".join(f"{x:g}" for x in self.theta_pool)
        return f"{self.model}-N{self.n_subjects}-J{self.n_items}-L{self.n_classes}-pool{pool}"


@dataclass(frozen=True, eq=False)
class Truth:
    """Ground truth: item parameters plus mixing weights (random) or assignments (fixed)."""

    model: ModelKind
    theta: ItemParams
    p: MixingWeights | None = None
    z: LatentAssignment | None = None

    @property
    def membership(self) -> MixingWeights | LatentAssignment:
        return self.p if self.model == "random" else self.z


def gen_truth(design: SimDesign, rng: RandomSource = None) -> Truth:
    """
    θ entries i.i.d. uniform over the pool; p uniform on {p >= p_floor} or z uniform over classes.

    The constrained simplex draw is the affine image f + (1 − L·f)·Dirichlet(1),
    which is exactly uniform on the constrained set.
    """
    rng = make_rng(rng)
    L = design.n_classes
    theta = ItemParams(theta=rng.choice(np.asarray(design.theta_pool), size=(design.n_items, L)))
    if design.model == "random":
        f = design.p_floor
        p = f + (1.0 - L * f) * rng.dirichlet(np.ones(L))
        return Truth(model="random", theta=theta, p=MixingWeights(p=p / p.sum()))
    z = LatentAssignment(labels=rng.integers(0, L, size=design.n_subjects), n_classes=L)
    return Truth(model="fixed", theta=theta, z=z)


def gen_responses(theta: ItemParams, membership: MixingWeights | LatentAssignment, N: int,
                  rng: RandomSource = None) -> tuple[ResponseMatrix, LatentAssignment]:
    """Draw z (random model) or use the given z (fixed model), then R_ij ~ Bernoulli(θ_{j,z_i})."""
    rng = make_rng(rng)
    L = theta.n_classes
    if isinstance(membership, MixingWeights):
        if membership.n_classes != L:
            raise DimensionMismatch(f"p has {membership.n_classes} classes, theta has {L}")
        z = LatentAssignment(labels=rng.choice(L, size=N, p=membership.p), n_classes=L)
    else:
        if membership.n_subjects != N or membership.n_classes != L:
            raise DimensionMismatch("Assignments do not match N or the number of classes")
        z = membership
    probs = theta.theta[:, z.labels].T
    R = (rng.random(probs.shape) < probs).astype(np.int8)
    return ResponseMatrix(data=R), z


def grid_designs(model: ModelKind = "random", seed: int = 0) -> list[SimDesign]:
    """The 24 settings: N × J × L × item-parameter pool."""
    designs = []
    for n in (1000, 10000, 20000):
        for j in (100, 200):
            for l in (5, 10):
                for pool in (STRONG_POOL, WEAK_POOL):
                    designs.append(SimDesign(n_subjects=n, n_items=j, n_classes=l, theta_pool=pool,
                                             model=model, seed=seed + len(designs)))
    return designs


def consistency_designs(pool: tuple[float, ...] = STRONG_POOL, js: Iterable[int] = range(20, 101, 10),
                        n_classes: int = 5, seed: int = 0) -> list[SimDesign]:
    """Fixed-effect designs with N = 10J for the clustering-consistency sweep."""
    return [
        SimDesign(n_subjects=10 * j, n_items=j, n_classes=n_classes, theta_pool=pool, model="fixed", seed=seed + k)
        for k, j in enumerate(js)
    ]


def neighbor_candidates(n_classes: int) -> list[int]:
    """Candidate set L−3..L+2, e.g. 2..7 around five classes."""
    return [c for c in range(n_classes - 3, n_classes + 3) if c >= 1]


def _streams(design: SimDesign, reps: int) -> tuple[np.random.Generator, list[np.random.Generator]]:
    children = spawn(design.seed, reps + 1)
    return children[0], children[1:]


def _benchmark_cell(design: SimDesign, truth: Truth, rep: int, rep_rng: np.random.Generator,
                    methods: list[str], settings: Settings, record_timing: bool) -> list[dict]:
    data_rng, *method_rngs = spawn(rep_rng, 1 + len(METHOD_NAMES))
    R, z = gen_responses(truth.theta, truth.membership, design.n_subjects, data_rng)
    rows = []
    for name in methods:
        row = {"setting_id": design.setting_id, "method": name, "rep": rep, "mse": np.nan, "loglik": np.nan,
               "runtime_ms": np.nan, "error_rate": np.nan, "converged": False, "error": ""}
        try:
            method = build_method(name, design.model, settings, init_theta=truth.theta, init_p=truth.p)
            fit = method.fit(R, design.n_classes, method_rngs[METHOD_NAMES.index(name)])
            row.update(mse=mse(truth.theta, fit.theta_hat), loglik=fit.loglik,
                       runtime_ms=fit.runtime_ms if record_timing else 0.0, converged=fit.converged)
            if fit.z_hat is not None:
                row["error_rate"] = error_rate(z, fit.z_hat)
        except LCMError as e:
            logger.warning(f"{design.setting_id} rep {rep} {name}: {e}")
            row["error"] = f"{type(e).__name__}: {e}"
        rows.append(row)
    logger.info(f"{design.setting_id} rep {rep} done")
    return rows


def run_benchmark(
    designs: list[SimDesign],
    methods: Iterable[str] = METHOD_NAMES,
    reps: int = 20,
    settings: Settings | None = None,
    threads: int = 1,
    record_timing: bool = True,
) -> pd.DataFrame:
    """
    Compare methods over replications of each design.

    θ and p (random model) or θ and z (fixed model) are drawn once per design;
    every replication redraws the responses. Streams come from the design
    seed, so results do not depend on ``threads``. Failures are recorded in
    the ``error`` column and the run continues.
    """
    settings = settings or Settings()
    methods = [normalize_method_name(m) for m in methods]
    cells = []
    for design in designs:
        truth_rng, rep_rngs = _streams(design, reps)
        truth = gen_truth(design, truth_rng)
        cells.extend((design, truth, rep, rep_rng) for rep, rep_rng in enumerate(rep_rngs))

    def run(cell) -> list[dict]:
        design, truth, rep, rep_rng = cell
        return _benchmark_cell(design, truth, rep, rep_rng, methods, settings, record_timing)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(run, cells))
    rows = [row for cell_rows in results for row in cell_rows]
    return pd.DataFrame(rows, columns=BENCHMARK_COLUMNS)


def run_gic_benchmark(
    designs: list[SimDesign],
    reps: int = 20,
    candidates_for: Callable[[int], list[int]] = neighbor_candidates,
    settings: Settings | None = None,
    threads: int = 1,
) -> pd.DataFrame:
    """One row per design and replication with the classes selected by GIC1 and GIC2."""
    settings = settings or Settings()

    def run(cell) -> dict:
        design, truth, rep, rep_rng = cell
        data_rng, select_rng = spawn(rep_rng, 2)
        R, _ = gen_responses(truth.theta, truth.membership, design.n_subjects, data_rng)
        report = select_L(R, candidates_for(design.n_classes), design.model, "gic1", settings, select_rng)
        return {"setting_id": design.setting_id, "model": design.model, "rep": rep,
                "true_L": design.n_classes, "selected_gic1": report.selected["gic1"],
                "selected_gic2": report.selected["gic2"]}

    cells = []
    for design in designs:
        truth_rng, rep_rngs = _streams(design, reps)
        truth = gen_truth(design, truth_rng)
        cells.extend((design, truth, rep, rep_rng) for rep, rep_rng in enumerate(rep_rngs))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return pd.DataFrame(list(pool.map(run, cells)))


def summarize_gic(table: pd.DataFrame) -> pd.DataFrame:
    """Fraction of replications selecting the true number of classes, per setting."""
    if table.empty:
        raise DataValidationError("No GIC benchmark rows to summarize")
    hits = table.assign(
        gic1=table["selected_gic1"] == table["true_L"],
        gic2=table["selected_gic2"] == table["true_L"],
    )
    return hits.groupby(["setting_id", "model"], sort=False)[["gic1", "gic2"]].mean().reset_index()
