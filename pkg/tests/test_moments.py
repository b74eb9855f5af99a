import itertools

import numpy as np
import pytest

from core.errors import DimensionMismatch, RankCollapse, RankDeficientView, TooFewItemsForViews
from core.types import ItemParams, MixingWeights, ResponseMatrix
from modules.moments import (
    ViewPartition,
    default_partition,
    empirical_moments,
    population_moments,
    truncated_pinv,
)
from modules.simulate import gen_responses


@pytest.fixture
def two_class_model():
    """Every view holds the block [[0.9, 0.1], [0.1, 0.9]]."""
    block = [[0.9, 0.1], [0.1, 0.9]]
    return ItemParams(theta=block * 3), MixingWeights(p=[0.5, 0.5])


def test_default_partition_thirds():
    part = default_partition(9, 3)
    assert part.view1 == (0, 1, 2)
    assert part.view2 == (3, 4, 5)
    assert part.view3 == (6, 7, 8)


def test_default_partition_sizes():
    assert default_partition(10, 3).sizes == (4, 3, 3)
    assert default_partition(11, 3).sizes == (4, 4, 3)


def test_default_partition_too_few_items():
    with pytest.raises(TooFewItemsForViews):
        default_partition(8, 3)


def test_default_partition_with_permutation():
    perm = [8, 7, 6, 5, 4, 3, 2, 1, 0]
    part = default_partition(9, 3, perm)
    assert part.view1 == (8, 7, 6)
    with pytest.raises(DimensionMismatch):
        default_partition(9, 3, [0, 0, 1, 2, 3, 4, 5, 6, 7])


def test_view_partition_must_be_disjoint():
    with pytest.raises(DimensionMismatch):
        ViewPartition((0, 1), (1, 2), (3, 4))


def test_population_moments_two_classes(two_class_model):
    theta, p = two_class_model
    moments = population_moments(theta, p, default_partition(6, 2))
    np.testing.assert_allclose(moments.m2, [[0.41, 0.09], [0.09, 0.41]], atol=1e-12)
    assert moments.m3.entries[0, 0, 0] == pytest.approx(0.365, abs=1e-12)


def test_population_moments_single_class():
    c = np.array([0.3, 0.6, 0.2, 0.7, 0.4, 0.5])
    moments = population_moments(ItemParams(theta=c), MixingWeights(p=[1.0]), default_partition(6, 1))
    c1 = c[:2]
    np.testing.assert_allclose(moments.m2, np.outer(c1, c1), atol=1e-15)
    np.testing.assert_allclose(moments.m3.entries, np.einsum("i,j,k->ijk", c1, c1, c1), atol=1e-15)


def test_population_moments_brute_force():
    rng = np.random.default_rng(5)
    theta = ItemParams(theta=rng.uniform(0.05, 0.95, size=(9, 3)))
    p = MixingWeights(p=[0.2, 0.3, 0.5])
    part = default_partition(9, 3)
    moments = population_moments(theta, p, part)
    t1 = theta.theta[list(part.view1)]
    for i, j, k in itertools.product(range(3), repeat=3):
        expected = sum(p.p[a] * t1[i, a] * t1[j, a] * t1[k, a] for a in range(3))
        assert moments.m3.entries[i, j, k] == pytest.approx(expected, abs=1e-12)
    np.testing.assert_allclose(moments.m2, moments.m2.T, atol=1e-10)


def test_population_moments_rank_deficient_view():
    theta = ItemParams(theta=[[0.5, 0.5]] * 6)
    with pytest.raises(RankDeficientView):
        population_moments(theta, MixingWeights.uniform(2), default_partition(6, 2))


def test_empirical_cross_moments_of_identical_rows():
    r = np.array([1, 0, 1, 1, 1, 0])
    R = ResponseMatrix(data=np.tile(r, (25, 1)))
    moments = empirical_moments(R, default_partition(6, 1), 1)
    np.testing.assert_array_equal(moments.cross_12, np.outer(r[:2], r[2:4]))


def test_empirical_moments_rank_collapse():
    R = ResponseMatrix(data=np.tile([1, 0, 1, 1, 1, 0], (25, 1)))
    with pytest.raises(RankCollapse):
        empirical_moments(R, default_partition(6, 2), 2)


def test_empirical_moments_need_enough_subjects():
    R = ResponseMatrix(data=[[1, 0, 1, 1, 0, 1]])
    with pytest.raises(RankCollapse):
        empirical_moments(R, default_partition(6, 2), 2)


def test_empirical_m2_is_symmetric(two_class_model):
    theta, p = two_class_model
    R, _ = gen_responses(theta, p, 500, rng=1)
    m2 = empirical_moments(R, default_partition(6, 2), 2).m2
    assert np.array_equal(m2, m2.T)


def test_empirical_moments_close_to_population(two_class_model):
    theta, p = two_class_model
    part = default_partition(6, 2)
    R, _ = gen_responses(theta, p, 2000, rng=2024)
    m2_hat = empirical_moments(R, part, 2).m2
    assert np.linalg.norm(m2_hat - population_moments(theta, p, part).m2) < 0.1


def test_empirical_moments_converge_with_n():
    theta = ItemParams(theta=[[0.8, 0.2, 0.3], [0.2, 0.8, 0.7], [0.3, 0.3, 0.9]] * 3)
    p = MixingWeights(p=[0.3, 0.3, 0.4])
    part = default_partition(9, 3)
    exact = population_moments(theta, p, part)
    errors = []
    for n in (1000, 10000):
        R, _ = gen_responses(theta, p, n, rng=99)
        est = empirical_moments(R, part, 3)
        errors.append(np.linalg.norm(est.m3.entries - exact.m3.entries))
    assert errors[1] < errors[0]


def test_chunked_third_moment_matches_direct_sum(two_class_model):
    theta, p = two_class_model
    part = default_partition(6, 2)
    R, _ = gen_responses(theta, p, 4500, rng=3)
    moments = empirical_moments(R, part, 2)

    X = R.data.astype(float)
    X1, X2, X3 = (X[:, v] for v in part.views)
    r2 = X2 @ (moments.cross_13 @ truncated_pinv(moments.cross_23, 2)).T
    r3 = X3 @ (moments.cross_12 @ truncated_pinv(moments.cross_32, 2)).T
    direct = np.einsum("ni,nj,nk->ijk", X1, r2, r3) / R.n_subjects
    np.testing.assert_allclose(moments.m3.entries, direct, atol=1e-10)


def test_truncated_pinv_diagonal():
    np.testing.assert_allclose(truncated_pinv(np.diag([2.0, 1.0]), 2), np.diag([0.5, 1.0]))
    np.testing.assert_allclose(truncated_pinv(np.diag([2.0, 1.0, 1e-13]), 2), np.diag([0.5, 1.0, 0.0]), atol=1e-15)


def test_truncated_pinv_moore_penrose():
    rng = np.random.default_rng(8)
    A = rng.normal(size=(5, 2)) @ rng.normal(size=(2, 4))
    np.testing.assert_allclose(A @ truncated_pinv(A, 2) @ A, A, atol=1e-10)


def test_truncated_pinv_rank_collapse():
    with pytest.raises(RankCollapse):
        truncated_pinv(np.diag([1.0, 1e-14]), 2)
    with pytest.raises(RankCollapse):
        truncated_pinv(np.ones((1, 3)), 2)
