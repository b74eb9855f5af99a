"""Dense third-order tensors and the multilinear maps used by the power method."""
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from core.errors import DimensionMismatch, NotUnitVector

UNIT_NORM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Tensor3:
    """A d×d×d real tensor. Symmetry is not enforced."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float, copy=True)
        if arr.ndim != 3 or not (arr.shape[0] == arr.shape[1] == arr.shape[2]) or arr.shape[0] == 0:
            raise DimensionMismatch(f"Tensor3 needs a non-empty d×d×d array, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @classmethod
    def zeros(cls, dim: int) -> "Tensor3":
        return cls(np.zeros((dim, dim, dim)))


def _vector(T: Tensor3, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (T.dim,):
        raise DimensionMismatch(f"Vector of shape {u.shape} does not match tensor dimension {T.dim}")
    return u


def contract_Iuu(T: Tensor3, u: np.ndarray) -> np.ndarray:
    """T(I, u, u): ``v[i] = sum_{j,l} T[i,j,l] u[j] u[l]``."""
    u = _vector(T, u)
    return T.entries @ u @ u


def contract_uuu(T: Tensor3, u: np.ndarray) -> float:
    """T(u, u, u)."""
    u = _vector(T, u)
    return float(contract_Iuu(T, u) @ u)


def contract_WWW(T: Tensor3, W: np.ndarray) -> Tensor3:
    """T(W, W, W) for a d×L matrix W, giving an L×L×L tensor."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != T.dim:
        raise DimensionMismatch(f"W of shape {W.shape} does not have {T.dim} rows")
    return Tensor3(np.einsum("ijk,ia,jb,kc->abc", T.entries, W, W, W, optimize=True))


def rank_one(lam: float, v: np.ndarray) -> Tensor3:
    """λ·v⊗v⊗v."""
    v = np.asarray(v, dtype=float).ravel()
    return Tensor3(lam * np.einsum("i,j,k->ijk", v, v, v))


def deflate(T: Tensor3, lam: float, v: np.ndarray) -> Tensor3:
    """T − λ·v⊗v⊗v for a unit vector v."""
    v = _vector(T, v)
    if abs(np.linalg.norm(v) - 1.0) > UNIT_NORM_TOL:
        raise NotUnitVector(f"Deflation vector has norm {np.linalg.norm(v)!r}")
    return Tensor3(T.entries - rank_one(lam, v).entries)


def symmetrize(T: Tensor3) -> Tensor3:
    """
    Average over the six index permutations.

    The result is exactly symmetric: every entry is copied from the entry at
    its sorted index, so no rounding difference survives between permutations.
    """
    avg = sum(np.transpose(T.entries, axes) for axes in permutations(range(3))) / 6.0
    idx = np.sort(np.indices(avg.shape).reshape(3, -1), axis=0)
    return Tensor3(avg[tuple(idx)].reshape(avg.shape))
