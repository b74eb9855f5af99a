import numpy as np
import pytest

from config.settings import Settings
from core.errors import UsageError
from core.types import ItemParams, MixingWeights
from modules.pipeline import fit_response_matrix
from modules.simulate import gen_responses
from utils.random import make_rng, spawn


@pytest.fixture
def two_class_sample():
    """N=400, J=12, L=2 with well-separated classes."""
    theta = ItemParams(theta=[[0.1, 0.9], [0.9, 0.1], [0.2, 0.8]] * 4)
    p = MixingWeights(p=[0.4, 0.6])
    R, _ = gen_responses(theta, p, 400, rng=12)
    return R, theta, p


def test_spawn_children_are_reproducible():
    a = [g.random() for g in spawn(7, 3)]
    b = [g.random() for g in spawn(7, 3)]
    assert a == b
    assert len(set(a)) == 3


def test_spawn_matches_generator_spawn():
    a = [g.random() for g in spawn(make_rng(5), 2)]
    b = [g.random() for g in make_rng(5).spawn(2)]
    assert a == b


def test_fit_response_matrix_tensor_em(two_class_sample):
    R, _, _ = two_class_sample
    fit = fit_response_matrix(R, 2, rng=0)
    assert fit.method == "tensor-em"
    assert fit.model == "random"
    assert fit.converged
    assert fit.p_hat.p.sum() == pytest.approx(1.0)


def test_fit_response_matrix_is_seeded(two_class_sample):
    R, _, _ = two_class_sample
    a = fit_response_matrix(R, 2, method="em-random", rng=3, restarts=2)
    b = fit_response_matrix(R, 2, method="em-random", rng=3, restarts=2)
    np.testing.assert_array_equal(a.theta_hat.theta, b.theta_hat.theta)
    assert a.loglik == b.loglik


def test_fit_response_matrix_em_init_fixed(two_class_sample):
    R, theta, _ = two_class_sample
    fit = fit_response_matrix(R, 2, method="em-true", model="fixed", settings=Settings(), init_theta=theta)
    assert fit.method == "em-init"
    assert fit.z_hat.n_subjects == 400


def test_fit_response_matrix_needs_init(two_class_sample):
    R, _, _ = two_class_sample
    with pytest.raises(UsageError):
        fit_response_matrix(R, 2, method="em-init")
