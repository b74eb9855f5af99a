"""Three-view partition and the second/third moments of the multi-view structure.

Item indices are 0-based here. Cross moments ``cross_ab`` stand for
E[R^a ⊗ R^b], a J_a×J_b matrix.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from core.errors import (
    DimensionMismatch,
    RankCollapse,
    RankDeficientView,
    TooFewItemsForViews,
)
from core.types import ItemParams, MixingWeights, ResponseMatrix
from .tensor import Tensor3

logger = logging.getLogger(__name__)

SINGULAR_FLOOR = 1e-12
VIEW_RANK_TOL = 1e-10
CHUNK_ROWS = 2048


@dataclass(frozen=True, eq=False)
class ViewPartition:
    """Three disjoint ordered item blocks."""

    view1: tuple[int, ...]
    view2: tuple[int, ...]
    view3: tuple[int, ...]

    def __post_init__(self):
        views = tuple(tuple(int(i) for i in v) for v in (self.view1, self.view2, self.view3))
        for name, view in zip(("view1", "view2", "view3"), views):
            object.__setattr__(self, name, view)
            if not view:
                raise TooFewItemsForViews(f"{name} is empty")
            if min(view) < 0:
                raise DimensionMismatch(f"{name} holds a negative item index")
        flat = [i for v in views for i in v]
        if len(set(flat)) != len(flat):
            raise DimensionMismatch("Views must be pairwise disjoint")

    @property
    def views(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.asarray(v, dtype=int) for v in (self.view1, self.view2, self.view3))

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.view1), len(self.view2), len(self.view3)

    def check(self, n_items: int, n_classes: int) -> None:
        """Raise unless every view fits in ``n_items`` and holds at least L items."""
        if max(max(v) for v in (self.view1, self.view2, self.view3)) >= n_items:
            raise DimensionMismatch(f"Partition refers to items beyond J={n_items}")
        if min(self.sizes) < n_classes:
            raise TooFewItemsForViews(f"View sizes {self.sizes} cannot hold L={n_classes} classes each")


@dataclass(frozen=True, eq=False)
class MomentPair:
    """Whitening inputs M2/M3 plus the cross moments needed to recover views 2 and 3."""

    m2: np.ndarray
    m3: Tensor3
    cross_12: np.ndarray
    cross_13: np.ndarray
    cross_23: np.ndarray
    cross_32: np.ndarray


def default_partition(J: int, L: int, permutation: np.ndarray | list[int] | None = None) -> ViewPartition:
    """
    Split items into contiguous thirds of sizes ⌈J/3⌉, ⌈(J−⌈J/3⌉)/2⌉ and the rest.

    With a permutation, the thirds are taken over ``permutation`` instead of
    ``0..J-1``; the views still hold original item indices.
    """
    if J < 3 * L:
        raise TooFewItemsForViews(f"J={J} items cannot fill three views of at least L={L} items")
    order = np.arange(J) if permutation is None else np.asarray(permutation, dtype=int)
    if sorted(order.tolist()) != list(range(J)):
        raise DimensionMismatch(f"Permutation is not a permutation of 0..{J - 1}")
    s1 = math.ceil(J / 3)
    s2 = math.ceil((J - s1) / 2)
    return ViewPartition(order[:s1], order[s1:s1 + s2], order[s1 + s2:])


def truncated_pinv(A: np.ndarray, L: int) -> np.ndarray:
    """
    Pseudoinverse keeping exactly the top L singular triplets.

    Raises:
        RankCollapse: If fewer than L singular values exceed 1e-12·σ_max
    """
    A = np.asarray(A, dtype=float)
    if min(A.shape) < L:
        raise RankCollapse(f"A {A.shape[0]}×{A.shape[1]} matrix cannot have rank L={L}")
    U, s, Vt = scipy.linalg.svd(A, full_matrices=False)
    floor = SINGULAR_FLOOR * s[0] if s.size else 0.0
    n_kept = int(np.sum(s > floor)) if s.size and s[0] > 0 else 0
    if n_kept < L:
        raise RankCollapse(f"Only {n_kept} singular value(s) above the floor; L={L} required")
    return (Vt[:L].T / s[:L]) @ U[:, :L].T


def _check_view_rank(theta_t: np.ndarray, L: int, view: int) -> None:
    s = scipy.linalg.svdvals(theta_t)
    rank = int(np.sum(s > VIEW_RANK_TOL * s[0])) if s.size and s[0] > 0 else 0
    if rank < L:
        raise RankDeficientView(f"View {view} item parameters have rank {rank} < L={L}")


def population_moments(theta: ItemParams, p: MixingWeights, part: ViewPartition) -> MomentPair:
    """Exact moments M2 = Σ p_i θ_{1,i}⊗θ_{1,i}, M3 = Σ p_i θ_{1,i}⊗³ and the cross moments θ_t D θ_t'ᵀ."""
    L = theta.n_classes
    if p.n_classes != L:
        raise DimensionMismatch(f"p has {p.n_classes} classes but theta has {L}")
    part.check(theta.n_items, 1)
    blocks = [theta.theta[v] for v in part.views]
    for t, block in enumerate(blocks, start=1):
        _check_view_rank(block, L, t)

    t1, t2, t3 = blocks
    w = p.p

    def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return (a * w) @ b.T

    return MomentPair(
        m2=cross(t1, t1),
        m3=Tensor3(np.einsum("ia,ja,ka,a->ijk", t1, t1, t1, w)),
        cross_12=cross(t1, t2),
        cross_13=cross(t1, t3),
        cross_23=cross(t2, t3),
        cross_32=cross(t3, t2),
    )


def empirical_moments(R: ResponseMatrix, part: ViewPartition, L: int) -> MomentPair:
    """
    Sample moments with rank-L truncated pseudoinverses.

    The transformed responses R̂²' and R̂³' and the third moment are
    accumulated over row chunks, so no N×J₁² intermediate is materialized.
    """
    N = R.n_subjects
    if N < L:
        raise RankCollapse(f"N={N} subjects cannot identify L={L} classes")
    part.check(R.n_items, L)
    v1, v2, v3 = part.views
    data = R.data

    X1 = data[:, v1].astype(float)
    X2 = data[:, v2].astype(float)
    X3 = data[:, v3].astype(float)
    cross_12 = X1.T @ X2 / N
    cross_13 = X1.T @ X3 / N
    cross_23 = X2.T @ X3 / N
    cross_32 = cross_23.T.copy()

    # R̂²' = Ê[R¹⊗R³] Ê[R²⊗R³]⁺ R²,  R̂³' = Ê[R¹⊗R²] Ê[R³⊗R²]⁺ R³
    to_view1_from2 = cross_13 @ truncated_pinv(cross_23, L)
    to_view1_from3 = cross_12 @ truncated_pinv(cross_32, L)

    J1 = len(v1)
    m2 = np.zeros((J1, J1))
    m3 = np.zeros((J1, J1 * J1))
    for start in range(0, N, CHUNK_ROWS):
        rows = slice(start, start + CHUNK_ROWS)
        x1 = X1[rows]
        r2 = X2[rows] @ to_view1_from2.T
        r3 = X3[rows] @ to_view1_from3.T
        m2 += x1.T @ r2
        m3 += x1.T @ (r2[:, :, None] * r3[:, None, :]).reshape(len(x1), J1 * J1)
    m2 /= N
    m3 /= N
    logger.debug(f"Empirical moments from N={N}, view sizes {part.sizes}")

    return MomentPair(
        m2=(m2 + m2.T) / 2.0,
        m3=Tensor3(m3.reshape(J1, J1, J1)),
        cross_12=cross_12,
        cross_13=cross_13,
        cross_23=cross_23,
        cross_32=cross_32,
    )
