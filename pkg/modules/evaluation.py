"""Accuracy metrics: permutation-aligned parameter error and clustering errors."""
import logging
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from core.errors import DimensionMismatch
from core.types import ItemParams, LatentAssignment

logger = logging.getLogger(__name__)

EXHAUSTIVE_MAX_CLASSES = 8


def align_columns(theta_true: ItemParams, theta_hat: ItemParams) -> tuple[np.ndarray, ItemParams]:
    """
    Column permutation of ``theta_hat`` closest to ``theta_true`` in Frobenius norm.

    Exhaustive search for L <= 8 (ties go to the lexicographically first
    permutation); Hungarian assignment on the column cost matrix beyond that.
    Returns ``perm`` with aligned column ``a`` = ``theta_hat`` column ``perm[a]``.
    """
    A, B = theta_true.theta, theta_hat.theta
    if A.shape != B.shape:
        raise DimensionMismatch(f"Cannot align theta of shape {B.shape} to {A.shape}")
    L = A.shape[1]
    cost = ((A[:, :, None] - B[:, None, :]) ** 2).sum(axis=0)

    if L <= EXHAUSTIVE_MAX_CLASSES:
        perms = np.array(list(permutations(range(L))), dtype=int)
        totals = cost[np.arange(L), perms].sum(axis=1)
        perm = perms[int(np.argmin(totals))]
    else:
        rows, cols = linear_sum_assignment(cost)
        perm = cols[np.argsort(rows)]
    return perm, theta_hat.permute_columns(perm)


def mse(theta_true: ItemParams, theta_hat: ItemParams) -> float:
    """Σ(θ − θ̂)²/(JL) after column alignment."""
    _, aligned = align_columns(theta_true, theta_hat)
    return float(np.mean((theta_true.theta - aligned.theta) ** 2))


def clustering_errors(z_true: LatentAssignment, z_hat: LatentAssignment) -> int:
    """
    Number of subjects whose true class is not the majority class of their estimated cluster.

    Each estimated cluster is matched to its majority true class on its own,
    so two clusters may share a label. Majority ties go to the smaller label.
    """
    if z_true.n_subjects != z_hat.n_subjects:
        raise DimensionMismatch(f"z_true has {z_true.n_subjects} subjects, z_hat has {z_hat.n_subjects}")
    correct = 0
    for cluster in np.unique(z_hat.labels):
        counts = np.bincount(z_true.labels[z_hat.labels == cluster], minlength=z_true.n_classes)
        correct += int(counts.max())
    return z_true.n_subjects - correct


def error_rate(z_true: LatentAssignment, z_hat: LatentAssignment) -> float:
    """Clustering errors divided by N."""
    if z_true.n_subjects == 0:
        return 0.0
    return clustering_errors(z_true, z_hat) / z_true.n_subjects
