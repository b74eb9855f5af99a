"""Concrete estimation methods: tensor-EM and its three comparison baselines."""
import logging
import time

import numpy as np

from config.settings import Settings
from core.errors import UsageError
from core.types import FitResult, ItemParams, MixingWeights, ModelKind, ResponseMatrix
from utils.random import RandomSource, spawn
from .base import BaseMethod
from .em import assign_classes, loglik_fixed, loglik_random
from .spectral import TensorEstimate, tensor_estimate, tensor_estimate_averaged

logger = logging.getLogger(__name__)


def _elapsed_ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


class TensorEMMethod(BaseMethod):
    """One tensor power-method run, then EM/CEM from the tensor estimate."""

    name = "tensor-em"

    def fit(self, R: ResponseMatrix, n_classes: int, rng: RandomSource = None) -> FitResult:
        start = time.perf_counter()
        logger.info(f"Tensor-EM ({self.model}) with L={n_classes} on N={R.n_subjects}, J={R.n_items}")
        estimate = tensor_estimate(R, n_classes, rng=rng, config=self.settings.spectral)
        fit = self.refine(R, estimate.p_hat, estimate.theta_hat)
        return fit.model_copy(update={"runtime_ms": _elapsed_ms(start), "method": self.name})


class TensorMethod(BaseMethod):
    """The tensor estimate alone, averaged over random item permutations."""

    name = "tensor"

    def __init__(self, model: ModelKind = "random", settings: Settings | None = None, averaged: bool = True):
        super().__init__(model, settings)
        self.averaged = averaged

    def fit(self, R: ResponseMatrix, n_classes: int, rng: RandomSource = None) -> FitResult:
        start = time.perf_counter()
        if self.averaged:
            estimate = tensor_estimate_averaged(R, n_classes, rng, self.settings.spectral)
        else:
            estimate = tensor_estimate(R, n_classes, rng=rng, config=self.settings.spectral)
        return self._as_fit(R, estimate, _elapsed_ms(start))

    def _as_fit(self, R: ResponseMatrix, estimate: TensorEstimate, runtime_ms: float) -> FitResult:
        theta = estimate.theta_hat
        if self.model == "random":
            loglik = loglik_random(R, estimate.p_hat, theta)
            return FitResult(theta_hat=theta, p_hat=estimate.p_hat, loglik=loglik, n_iterations=0,
                             converged=True, runtime_ms=runtime_ms, method=self.name, loglik_trace=[loglik])
        z = assign_classes(R, theta)
        loglik = loglik_fixed(R, z, theta)
        return FitResult(theta_hat=theta, z_hat=z, loglik=loglik, n_iterations=0,
                         converged=True, runtime_ms=runtime_ms, method=self.name, loglik_trace=[loglik])


class EMRandomMethod(BaseMethod):
    """EM/CEM from several random starts; the best log-likelihood wins."""

    name = "em-random"

    def __init__(self, model: ModelKind = "random", settings: Settings | None = None, restarts: int | None = None):
        super().__init__(model, settings)
        self.restarts = restarts or self.settings.methods.em_random_restarts

    def fit(self, R: ResponseMatrix, n_classes: int, rng: RandomSource = None) -> FitResult:
        start = time.perf_counter()
        cfg = self.settings.methods
        best: FitResult | None = None
        for k, child in enumerate(spawn(rng, self.restarts)):
            theta = ItemParams(theta=child.uniform(cfg.init_low, cfg.init_high, size=(R.n_items, n_classes)))
            fit = self.refine(R, MixingWeights.uniform(n_classes), theta)
            logger.debug(f"EM-random start {k + 1}/{self.restarts}: loglik={fit.loglik:.4f}")
            if best is None or fit.loglik > best.loglik:
                best = fit
        return best.model_copy(update={"runtime_ms": _elapsed_ms(start), "method": self.name})


class EMInitMethod(BaseMethod):
    """EM/CEM from user-supplied starting values (the true parameters give EM-true)."""

    name = "em-init"

    def __init__(self, init_theta: ItemParams, init_p: MixingWeights | None = None,
                 model: ModelKind = "random", settings: Settings | None = None):
        super().__init__(model, settings)
        self.init_theta = init_theta
        self.init_p = init_p

    def fit(self, R: ResponseMatrix, n_classes: int, rng: RandomSource = None) -> FitResult:
        if self.init_theta.n_classes != n_classes:
            raise UsageError(f"Initial theta has {self.init_theta.n_classes} classes, L={n_classes} requested")
        start = time.perf_counter()
        fit = self.refine(R, self.init_p, self.init_theta)
        return fit.model_copy(update={"runtime_ms": _elapsed_ms(start), "method": self.name})


METHOD_NAMES = ("em-init", "em-random", "tensor", "tensor-em")


def normalize_method_name(name: str) -> str:
    key = name.strip().lower().replace("_", "-")
    if key == "em-true":
        key = "em-init"
    if key not in METHOD_NAMES:
        raise UsageError(f"Unknown method {name!r}; choose from {', '.join(METHOD_NAMES)} or em-true")
    return key


def build_method(
    name: str,
    model: ModelKind = "random",
    settings: Settings | None = None,
    init_theta: ItemParams | None = None,
    init_p: MixingWeights | None = None,
    restarts: int | None = None,
) -> BaseMethod:
    """Create a method by CLI name (``em-true`` is an alias of ``em-init``)."""
    key = normalize_method_name(name)
    if key == "tensor-em":
        return TensorEMMethod(model, settings)
    if key == "tensor":
        return TensorMethod(model, settings)
    if key == "em-random":
        return EMRandomMethod(model, settings, restarts)
    if init_theta is None:
        raise UsageError("em-init needs initial values (--init)")
    return EMInitMethod(init_theta, init_p, model, settings)


def fit_response_matrix(R: ResponseMatrix, n_classes: int, method: str = "tensor-em",
                        model: ModelKind = "random", rng: RandomSource = None,
                        settings: Settings | None = None, **kwargs) -> FitResult:
    """One-call convenience around :func:`build_method`."""
    fit = build_method(method, model, settings, **kwargs).fit(R, n_classes, rng)
    logger.info(f"{fit.method}: loglik={fit.loglik:.4f}, iterations={fit.n_iterations}, "
                f"converged={fit.converged}, {fit.runtime_ms:.1f} ms")
    if not np.isfinite(fit.loglik):
        logger.warning(f"{fit.method}: non-finite log-likelihood")
    return fit
