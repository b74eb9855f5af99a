"""Log-likelihoods, EM for random-effect and Classification-EM for fixed-effect models."""
import logging
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from config.settings import EmConfig
from core.errors import DataValidationError, DimensionMismatch, InvalidProbabilities
from core.types import FitResult, ItemParams, LatentAssignment, MixingWeights, ResponseMatrix, response_array

logger = logging.getLogger(__name__)

ResponseLike = ResponseMatrix | np.ndarray
EMPTY_CLASS_MASS = 1e-12


@dataclass(frozen=True, eq=False)
class Posterior:
    """N×L class responsibilities."""

    gamma: np.ndarray

    def __post_init__(self):
        rows = self.gamma.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-10) or self.gamma.min() < 0 or self.gamma.max() > 1:
            raise DataValidationError("Posterior rows must be probability vectors")


def _check_shapes(R: np.ndarray, theta: ItemParams, n_classes: int | None = None) -> None:
    if R.shape[1] != theta.n_items:
        raise DimensionMismatch(f"R has {R.shape[1]} items, theta has {theta.n_items}")
    if n_classes is not None and n_classes != theta.n_classes:
        raise DimensionMismatch(f"Membership has {n_classes} classes, theta has {theta.n_classes}")


def _class_loglik(R: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """N×L matrix of Σ_j R_ij log θ_ja + (1 − R_ij) log(1 − θ_ja)."""
    if theta.min() <= 0.0 or theta.max() >= 1.0:
        raise InvalidProbabilities("Log-likelihood needs item parameters strictly inside (0, 1)")
    return R @ np.log(theta) + (1.0 - R) @ np.log1p(-theta)


def _log_joint(R: np.ndarray, p: np.ndarray, theta: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(p) + _class_loglik(R, theta)


def loglik_random(R: ResponseLike, p: MixingWeights, theta: ItemParams) -> float:
    """Marginal log-likelihood Σ_i log Σ_a p_a Π_j θ_ja^R_ij (1−θ_ja)^(1−R_ij)."""
    data = response_array(R)
    _check_shapes(data, theta, p.n_classes)
    return float(logsumexp(_log_joint(data, p.p, theta.theta), axis=1).sum())


def loglik_fixed(R: ResponseLike, z: LatentAssignment, theta: ItemParams) -> float:
    """Joint (complete-data) log-likelihood of assignments z and item parameters."""
    data = response_array(R)
    _check_shapes(data, theta, z.n_classes)
    if z.n_subjects != data.shape[0]:
        raise DimensionMismatch(f"z has {z.n_subjects} labels, R has {data.shape[0]} rows")
    ll = _class_loglik(data, theta.theta)
    return float(ll[np.arange(data.shape[0]), z.labels].sum())


def e_step(R: ResponseLike, p: MixingWeights, theta: ItemParams) -> Posterior:
    """Posterior class probabilities by Bayes' rule."""
    data = response_array(R)
    _check_shapes(data, theta, p.n_classes)
    log_joint = _log_joint(data, p.p, theta.theta)
    return Posterior(gamma=np.exp(log_joint - logsumexp(log_joint, axis=1, keepdims=True)))


def _within_class_means(R: np.ndarray, weights: np.ndarray, previous: np.ndarray, floor: float) -> np.ndarray:
    mass = weights.sum(axis=0)
    empty = mass <= EMPTY_CLASS_MASS
    theta = (R.T @ weights) / np.where(empty, 1.0, mass)
    theta[:, empty] = previous[:, empty]
    return np.clip(theta, floor, 1.0 - floor)


def m_step(R: ResponseLike, posterior: Posterior, previous_theta: ItemParams,
           cfg: EmConfig | None = None) -> tuple[MixingWeights, ItemParams]:
    """
    p_a = mean responsibility, θ_ja = responsibility-weighted item mean.

    Both are clipped at ``param_floor``; an empty class keeps its previous column.
    """
    cfg = cfg or EmConfig()
    data = response_array(R)
    gamma = posterior.gamma
    p = np.maximum(gamma.mean(axis=0), cfg.param_floor)
    theta = _within_class_means(data, gamma, previous_theta.theta, cfg.param_floor)
    return MixingWeights(p=p / p.sum()), ItemParams(theta=theta)


def assign_classes(R: ResponseLike, theta: ItemParams) -> LatentAssignment:
    """C-step: each subject to the class with the largest joint log-likelihood (lowest index on ties)."""
    data = response_array(R)
    _check_shapes(data, theta)
    labels = np.argmax(_class_loglik(data, theta.theta), axis=1)
    return LatentAssignment(labels=labels, n_classes=theta.n_classes)


def _start(init_theta: ItemParams, cfg: EmConfig) -> ItemParams:
    return ItemParams(theta=np.clip(init_theta.theta, cfg.param_floor, 1.0 - cfg.param_floor))


def em_random(R: ResponseLike, init_p: MixingWeights, init_theta: ItemParams,
              cfg: EmConfig | None = None) -> FitResult:
    """
    EM for the random-effect model.

    Stops when the log-likelihood gain per subject falls below ``cfg.tol``
    or after ``cfg.max_iters`` iterations.
    """
    cfg = cfg or EmConfig()
    start = time.perf_counter()
    data = response_array(R)
    N = data.shape[0]
    _check_shapes(data, init_theta, init_p.n_classes)

    p, theta = init_p, _start(init_theta, cfg)
    loglik = loglik_random(data, p, theta)
    trace = [loglik]
    converged = False
    n_iter = 0
    for n_iter in range(1, cfg.max_iters + 1):
        p, theta = m_step(data, e_step(data, p, theta), theta, cfg)
        new_loglik = loglik_random(data, p, theta)
        trace.append(new_loglik)
        gain = (new_loglik - loglik) / N
        loglik = new_loglik
        if gain < cfg.tol:
            converged = True
            break

    runtime_ms = (time.perf_counter() - start) * 1000.0
    if not converged:
        logger.warning(f"EM stopped after {n_iter} iterations without converging")
    logger.debug(f"EM: loglik={loglik:.6f} after {n_iter} iterations")
    return FitResult(theta_hat=theta, p_hat=p, loglik=loglik, n_iterations=n_iter,
                     converged=converged, runtime_ms=runtime_ms, loglik_trace=trace)


def cem_fixed(R: ResponseLike, init_p: MixingWeights | None, init_theta: ItemParams,
              cfg: EmConfig | None = None) -> FitResult:
    """
    Classification-EM for the fixed-effect model.

    Alternates the C-step with within-class means until the assignment stops
    changing. The joint likelihood has no mixing weights, so ``init_p`` only
    keeps the signature aligned with :func:`em_random`.
    """
    cfg = cfg or EmConfig()
    start = time.perf_counter()
    data = response_array(R)
    _check_shapes(data, init_theta, init_p.n_classes if init_p is not None else None)
    L = init_theta.n_classes

    theta = _start(init_theta, cfg)
    z = assign_classes(data, theta)
    trace = []
    converged = False
    n_iter = 0
    for n_iter in range(1, cfg.max_iters + 1):
        one_hot = z.one_hot().astype(float)
        theta = ItemParams(theta=_within_class_means(data, one_hot, theta.theta, cfg.param_floor))
        trace.append(loglik_fixed(data, z, theta))
        new_z = assign_classes(data, theta)
        if np.array_equal(new_z.labels, z.labels):
            converged = True
            break
        z = new_z

    runtime_ms = (time.perf_counter() - start) * 1000.0
    if not converged:
        logger.warning(f"CEM stopped after {n_iter} iterations without converging")
    return FitResult(theta_hat=theta, z_hat=z, loglik=trace[-1], n_iterations=n_iter,
                     converged=converged, runtime_ms=runtime_ms, loglik_trace=trace)
