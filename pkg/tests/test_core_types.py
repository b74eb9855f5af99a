import numpy as np
import pytest

from core.errors import (
    DataValidationError,
    DimensionMismatch,
    InvalidProbabilities,
    LCMError,
    NonBinaryEntry,
    TooFewItems,
)
from core.types import (
    FitResult,
    ItemParams,
    LatentAssignment,
    MixingWeights,
    ResponseMatrix,
    response_array,
    validate_response_matrix,
)


@pytest.fixture
def theta():
    return ItemParams(theta=[[0.9, 0.1], [0.8, 0.2], [0.3, 0.7]])


def test_validate_response_matrix():
    R = validate_response_matrix([[1, 0, 1], [0, 0, 1]])
    assert R.n_subjects == 2
    assert R.n_items == 3
    assert R.data.dtype == np.int8


def test_non_binary_entry_reports_position():
    with pytest.raises(NonBinaryEntry) as exc:
        validate_response_matrix([[1, 2, 1]])
    assert (exc.value.row, exc.value.col) == (0, 1)


def test_too_few_items():
    with pytest.raises(TooFewItems):
        validate_response_matrix([[1, 0], [0, 1]])


def test_ragged_rows_rejected():
    with pytest.raises(DimensionMismatch):
        validate_response_matrix([[1, 0, 1], [0, 1]])


def test_errors_are_not_value_errors():
    # pydantic would otherwise wrap them into a ValidationError
    assert not issubclass(LCMError, ValueError)
    assert NonBinaryEntry.exit_code == 3


def test_response_data_is_read_only():
    R = validate_response_matrix([[1, 0, 1]])
    with pytest.raises(ValueError):
        R.data[0, 0] = 0


def test_response_array_accepts_small_matrices():
    # log-likelihoods work for any J; only the moment method needs J >= 3
    arr = response_array([[1], [0]])
    assert arr.shape == (2, 1)
    with pytest.raises(NonBinaryEntry):
        response_array([[0.5]])


def test_item_params(theta):
    assert theta.n_items == 3
    assert theta.n_classes == 2
    assert theta.is_interior
    swapped = theta.permute_columns([1, 0])
    np.testing.assert_array_equal(swapped.theta[:, 0], theta.theta[:, 1])


def test_item_params_bounds():
    assert not ItemParams(theta=[[1.0], [0.0], [0.5]]).is_interior
    with pytest.raises(InvalidProbabilities):
        ItemParams(theta=[[1.2, 0.5]])
    with pytest.raises(InvalidProbabilities):
        ItemParams(theta=[[np.nan, 0.5]])


def test_vector_theta_is_one_column():
    assert ItemParams(theta=[0.8]).theta.shape == (1, 1)


def test_mixing_weights_tolerance():
    MixingWeights(p=[0.5, 0.5 + 5e-11])
    with pytest.raises(InvalidProbabilities):
        MixingWeights(p=[0.5, 0.5 + 1e-9])
    with pytest.raises(InvalidProbabilities):
        MixingWeights(p=[1.1, -0.1])


def test_mixing_weights_uniform_and_permute():
    p = MixingWeights(p=[0.2, 0.3, 0.5])
    np.testing.assert_allclose(MixingWeights.uniform(4).p, 0.25)
    np.testing.assert_array_equal(p.permute([2, 0, 1]).p, [0.5, 0.2, 0.3])


def test_latent_assignment_one_based():
    z = LatentAssignment.from_one_based([1, 2, 2, 3], n_classes=3)
    np.testing.assert_array_equal(z.labels, [0, 1, 1, 2])
    np.testing.assert_array_equal(z.one_based(), [1, 2, 2, 3])
    Z = z.one_hot()
    assert Z.shape == (4, 3)
    assert np.all(Z.sum(axis=1) == 1)


def test_latent_assignment_range():
    with pytest.raises(DataValidationError):
        LatentAssignment(labels=[0, 3], n_classes=3)
    with pytest.raises(DataValidationError):
        LatentAssignment(labels=[0.5], n_classes=2)


def test_fit_result_needs_exactly_one_membership(theta):
    p = MixingWeights.uniform(2)
    z = LatentAssignment(labels=[0, 1], n_classes=2)
    fit = FitResult(theta_hat=theta, p_hat=p, loglik=-1.0, n_iterations=3, converged=True, runtime_ms=1.0)
    assert fit.model == "random"
    assert fit.n_classes == 2
    fixed = FitResult(theta_hat=theta, z_hat=z, loglik=-1.0, n_iterations=3, converged=True, runtime_ms=1.0)
    assert fixed.model == "fixed"
    with pytest.raises(DataValidationError):
        FitResult(theta_hat=theta, p_hat=p, z_hat=z, loglik=-1.0, n_iterations=1, converged=True, runtime_ms=0.0)
    with pytest.raises(DataValidationError):
        FitResult(theta_hat=theta, loglik=-1.0, n_iterations=1, converged=True, runtime_ms=0.0)


def test_serialization_round_trip(theta):
    dumped = theta.model_dump()
    assert dumped["theta"] == [[0.9, 0.1], [0.8, 0.2], [0.3, 0.7]]
    np.testing.assert_array_equal(ItemParams.model_validate(dumped).theta, theta.theta)

    z = LatentAssignment(labels=[2, 0, 1], n_classes=3)
    again = LatentAssignment.model_validate(z.model_dump())
    np.testing.assert_array_equal(again.labels, z.labels)
    assert again.n_classes == 3

    R = ResponseMatrix(data=[[0, 1, 1]])
    np.testing.assert_array_equal(ResponseMatrix.model_validate(R.model_dump()).data, R.data)
