"""Spectral (tensor) estimation of a random-effect latent class model.

Pipeline: whiten M3 with M2, decompose the whitened tensor with the robust
tensor power method and deflation, undo the whitening to get view-1
parameters, recover views 2 and 3 from cross moments, then revise the
estimate into the parameter space.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from config.settings import SpectralConfig
from core.errors import DimensionMismatch, DomainError, InsufficientRank, ZeroIterate
from core.types import ItemParams, MixingWeights, ResponseMatrix
from utils.random import RandomSource, make_rng, spawn
from .evaluation import align_columns
from .moments import MomentPair, ViewPartition, default_partition, empirical_moments, truncated_pinv
from .tensor import Tensor3, contract_Iuu, contract_uuu, contract_WWW, deflate, symmetrize

logger = logging.getLogger(__name__)

EIGEN_FLOOR = 1e-12
ZERO_NORM = 1e-300
WHITENING_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class WhiteningMap:
    """W with WᵀM₂W = I_L, and (Wᵀ)⁺ (d×L) for un-whitening."""

    W: np.ndarray
    pinv_Wt: np.ndarray
    eigvals: np.ndarray

    @property
    def n_classes(self) -> int:
        return int(self.W.shape[1])


@dataclass(frozen=True, eq=False)
class Eigenpairs:
    """Eigenvalues and eigenvectors (as columns of ``vs``) of a whitened tensor."""

    lambdas: np.ndarray
    vs: np.ndarray

    def __post_init__(self):
        if np.any(self.lambdas <= 0):
            raise ZeroIterate(f"Non-positive eigenvalue in {self.lambdas}")

    @property
    def max_coherence(self) -> float:
        """Largest |v_iᵀv_j| over i ≠ j; zero for an exactly orthogonal decomposition."""
        G = np.abs(self.vs.T @ self.vs)
        np.fill_diagonal(G, 0.0)
        return float(G.max()) if G.size else 0.0


@dataclass(frozen=True, eq=False)
class TensorEstimate:
    """Revised tensor estimate; ``raw_violations`` counts clamped θ entries."""

    p_hat: MixingWeights
    theta_hat: ItemParams
    raw_violations: int


def build_whitener(M2: np.ndarray, L: int) -> WhiteningMap:
    """
    W = U D^{-1/2} from the top-L eigenpairs of M2.

    Raises:
        InsufficientRank: If the L-th largest eigenvalue is not above 1e-12·λ_max
    """
    M2 = np.asarray(M2, dtype=float)
    if M2.ndim != 2 or M2.shape[0] != M2.shape[1]:
        raise DimensionMismatch(f"M2 must be square, got shape {M2.shape}")
    if M2.shape[0] < L:
        raise InsufficientRank(f"{M2.shape[0]}×{M2.shape[0]} M2 cannot have rank L={L}")
    eigvals, eigvecs = scipy.linalg.eigh(M2)
    order = np.argsort(eigvals)[::-1][:L]
    top, U = eigvals[order], eigvecs[:, order]
    floor = EIGEN_FLOOR * max(eigvals.max(), 0.0)
    if top[-1] <= floor:
        raise InsufficientRank(f"Only {int(np.sum(top > floor))} eigenvalue(s) of M2 above the floor; L={L} required")
    root = np.sqrt(top)
    W = U / root
    residual = np.linalg.norm(W.T @ M2 @ W - np.eye(L))
    if residual > WHITENING_TOL:
        logger.warning(f"Whitening residual {residual:.2e} exceeds {WHITENING_TOL:.0e}; M2 may be asymmetric")
    return WhiteningMap(W=W, pinv_Wt=U * root, eigvals=top)


def _iterate(T: Tensor3, theta: np.ndarray, n_iters: int, tol: float) -> np.ndarray:
    for _ in range(n_iters):
        v = contract_Iuu(T, theta)
        norm = np.linalg.norm(v)
        if norm < ZERO_NORM:
            raise ZeroIterate("Power iterate vanished; the tensor is degenerate")
        v = v / norm
        step = np.linalg.norm(v - theta)
        theta = v
        if step < tol:
            break
    return theta


def power_iteration_path(T: Tensor3, theta0: np.ndarray, n_iters: int) -> np.ndarray:
    """Iterates θ_0..θ_n of θ ← T(I,θ,θ)/‖T(I,θ,θ)‖ without early stopping, as rows."""
    theta = np.asarray(theta0, dtype=float)
    path = [theta / np.linalg.norm(theta)]
    for _ in range(n_iters):
        path.append(_iterate(T, path[-1], 1, 0.0))
    return np.vstack(path)


def robust_power_method(
    T: Tensor3,
    n_restarts: int = 10,
    n_iters: int = 30,
    rng: RandomSource = None,
    tol: float = 1e-10,
    initial: np.ndarray | None = None,
) -> tuple[float, np.ndarray, Tensor3]:
    """
    One eigenpair of a (near) orthogonally decomposable tensor.

    Draws ``n_restarts`` starts uniformly on the unit sphere (or uses the rows
    of ``initial``), runs ``n_iters`` power updates from each, keeps the start
    maximizing T(θ,θ,θ), refines it with ``n_iters`` more updates and returns
    (λ, v, T − λ v⊗v⊗v). A negative λ is turned positive by flipping v.
    """
    if n_restarts < 1 or n_iters < 1:
        raise DomainError("n_restarts and n_iters must be at least 1")
    if initial is None:
        starts = make_rng(rng).standard_normal((n_restarts, T.dim))
    else:
        starts = np.atleast_2d(np.asarray(initial, dtype=float))
    norms = np.linalg.norm(starts, axis=1, keepdims=True)
    if np.any(norms < ZERO_NORM):
        raise ZeroIterate("Zero starting vector")
    starts = starts / norms

    candidates = [_iterate(T, start, n_iters, tol) for start in starts]
    scores = [contract_uuu(T, c) for c in candidates]
    best = int(np.argmax(scores))

    theta = _iterate(T, candidates[best], n_iters, tol)
    lam = contract_uuu(T, theta)
    if lam < 0:
        theta, lam = -theta, -lam
    return lam, theta, deflate(T, lam, theta)


def decompose(T: Tensor3, L: int, n_restarts: int = 10, n_iters: int = 30, rng: RandomSource = None,
              tol: float = 1e-10) -> Eigenpairs:
    """All L eigenpairs by repeated power method and deflation, sorted by descending λ."""
    rng = make_rng(rng)
    lambdas, vectors = [], []
    for k in range(L):
        lam, v, T = robust_power_method(T, n_restarts, n_iters, rng, tol)
        if lam < ZERO_NORM:
            raise ZeroIterate(f"Eigenpair {k + 1} has zero eigenvalue")
        logger.debug(f"Eigenpair {k + 1}/{L}: lambda={lam:.6g}")
        lambdas.append(lam)
        vectors.append(v)
    order = np.argsort(lambdas, kind="stable")[::-1]
    return Eigenpairs(lambdas=np.asarray(lambdas)[order], vs=np.column_stack(vectors)[:, order])


def unwhiten(pairs: Eigenpairs, wmap: WhiteningMap) -> tuple[np.ndarray, np.ndarray]:
    """(ω_i, μ_i) = (1/λ_i², λ_i (Wᵀ)⁺ v_i); μ is returned as a d×L matrix."""
    if pairs.vs.shape[0] != wmap.n_classes:
        raise DimensionMismatch(f"Eigenvectors of length {pairs.vs.shape[0]} vs whitening rank {wmap.n_classes}")
    omegas = 1.0 / pairs.lambdas ** 2
    mus = wmap.pinv_Wt @ (pairs.vs * pairs.lambdas)
    return omegas, mus


def recover_other_views(mus1: np.ndarray, moments: MomentPair) -> tuple[np.ndarray, np.ndarray]:
    """θ₂ = E[R²⊗R³]E[R¹⊗R³]⁺θ₁ and θ₃ = E[R³⊗R²]E[R¹⊗R²]⁺θ₁, rank-L truncated."""
    L = mus1.shape[1]
    theta2 = moments.cross_23 @ truncated_pinv(moments.cross_13, L) @ mus1
    theta3 = moments.cross_32 @ truncated_pinv(moments.cross_12, L) @ mus1
    return theta2, theta3


def _revise(omegas: np.ndarray, theta: np.ndarray, config: SpectralConfig) -> TensorEstimate:
    p = np.maximum(omegas, config.weight_floor)
    p = p / p.sum()
    outside = (theta < config.clamp_low) | (theta > config.clamp_high) | ~np.isfinite(theta)
    violations = int(outside.sum())
    if violations:
        logger.warning(f"Tensor estimate: clamped {violations} of {theta.size} item parameters")
    theta = np.clip(np.nan_to_num(theta, nan=0.5), config.clamp_low, config.clamp_high)
    return TensorEstimate(p_hat=MixingWeights(p=p), theta_hat=ItemParams(theta=theta), raw_violations=violations)


def estimate_from_moments(
    moments: MomentPair,
    part: ViewPartition,
    L: int,
    n_items: int,
    rng: RandomSource = None,
    config: SpectralConfig | None = None,
) -> TensorEstimate:
    """Run whitening, decomposition and recovery on given (empirical or population) moments."""
    config = config or SpectralConfig()
    wmap = build_whitener(moments.m2, L)
    whitened = symmetrize(contract_WWW(moments.m3, wmap.W))
    pairs = decompose(whitened, L, config.n_restarts, config.n_iters, rng, config.tol)
    omegas, mus1 = unwhiten(pairs, wmap)
    theta2, theta3 = recover_other_views(mus1, moments)

    # items outside the partition keep the uninformative value 0.5
    theta = np.full((n_items, L), 0.5)
    for view, block in zip(part.views, (mus1, theta2, theta3)):
        theta[view] = block
    return _revise(omegas, theta, config)


def tensor_estimate(
    R: ResponseMatrix,
    L: int,
    part: ViewPartition | None = None,
    rng: RandomSource = None,
    config: SpectralConfig | None = None,
) -> TensorEstimate:
    """Tensor estimate of (p, θ) from data: one partition, one power-method run."""
    part = part or default_partition(R.n_items, L)
    moments = empirical_moments(R, part, L)
    estimate = estimate_from_moments(moments, part, L, R.n_items, rng, config)
    logger.info(f"Tensor estimate for L={L}: {estimate.raw_violations} entries clamped")
    return estimate


def tensor_estimate_averaged(
    R: ResponseMatrix,
    L: int,
    rng: RandomSource = None,
    config: SpectralConfig | None = None,
) -> TensorEstimate:
    """
    Tensor-alone baseline: average estimates over random item permutations.

    Each permutation gives a partition over original item indices, so the
    estimates are already in original item order; their columns are aligned
    to the first estimate before averaging.
    """
    config = config or SpectralConfig()
    estimates = []
    for child in spawn(rng, config.n_permutations):
        part = default_partition(R.n_items, L, child.permutation(R.n_items))
        estimates.append(tensor_estimate(R, L, part, child, config))

    reference = estimates[0].theta_hat
    thetas, weights = [], []
    for est in estimates:
        perm, aligned = align_columns(reference, est.theta_hat)
        thetas.append(aligned.theta)
        weights.append(est.p_hat.p[perm])
    p = np.mean(weights, axis=0)
    return TensorEstimate(
        p_hat=MixingWeights(p=p / p.sum()),
        theta_hat=ItemParams(theta=np.mean(thetas, axis=0)),
        raw_violations=sum(e.raw_violations for e in estimates),
    )
