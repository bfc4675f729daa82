import numpy as np
import pytest

from workstats.errors import InvalidInputError
from workstats.operators import eigenspaces, is_hermitian, is_unitary, mat_exp, thermal_state, trace_form
from workstats.samples import random_hermitian


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def test_mat_exp_of_zero_is_identity():
    assert np.allclose(mat_exp(np.zeros((2, 2))), np.eye(2))


def test_mat_exp_diagonal():
    result = mat_exp(np.diag([1.0, 2.0]), -1j)
    assert np.allclose(result, np.diag([np.exp(-1j), np.exp(-2j)]), atol=1e-14)


def test_mat_exp_matches_eigendecomposition_for_non_hermitian(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    values, vectors = np.linalg.eig(a)
    expected = vectors @ np.diag(np.exp(0.3j * values)) @ np.linalg.inv(vectors)
    np.testing.assert_allclose(mat_exp(a, 0.3j), expected, atol=1e-10)


def test_mat_exp_inverse_and_unitarity(rng):
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    a *= 2.0 / np.linalg.norm(a, 2)
    assert np.allclose(mat_exp(a) @ mat_exp(a, -1.0), np.eye(5), atol=1e-10)
    h = random_hermitian(rng, 5)
    assert is_unitary(mat_exp(h, -1.7j))


def test_mat_exp_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        mat_exp(np.array([[np.nan, 0], [0, 1]]))


def test_thermal_state_infinite_temperature():
    state = thermal_state(np.diag([0.0, 1.0, 5.0]), 0.0)
    assert np.allclose(state.rho, np.eye(3) / 3)
    assert state.partition_function == pytest.approx(3.0)


def test_thermal_state_two_level():
    state = thermal_state(np.diag([0.0, 2.0]), 0.5)
    assert state.partition_function == pytest.approx(1 + np.exp(-1.0))
    assert np.trace(state.rho).real == pytest.approx(1.0, abs=1e-12)


def test_thermal_state_matches_eigenbasis_and_commutes(rng):
    h = random_hermitian(rng, 6)
    state = thermal_state(h, 0.7)
    energies, vectors = np.linalg.eigh(h)
    weights = np.exp(-0.7 * energies)
    expected = vectors @ np.diag(weights / weights.sum()) @ vectors.conj().T
    np.testing.assert_allclose(state.rho, expected, atol=1e-12)
    assert is_hermitian(state.rho)
    assert np.max(np.abs(state.rho @ h - h @ state.rho)) < 1e-10


def test_thermal_state_large_beta_keeps_log_partition_function():
    state = thermal_state(np.diag([-1000.0, 0.0]), 10.0)
    assert state.log_partition_function == pytest.approx(10000.0)
    assert state.rho[0, 0].real == pytest.approx(1.0)


def test_thermal_state_rejects_non_hermitian():
    with pytest.raises(InvalidInputError):
        thermal_state(np.array([[0, 1], [0, 0]]), 1.0)


def test_trace_form_trivial_cases():
    rho = np.eye(2) / 2
    assert trace_form(np.eye(2), rho) == pytest.approx(1.0)
    assert trace_form(np.diag([1.0, -1.0]), rho) == pytest.approx(0.0)


def test_trace_form_matches_naive_loop(rng):
    a, b, rho = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
    naive = sum(a[i, j] * b[j, k] * rho[k, i] for i in range(3) for j in range(3) for k in range(3))
    assert abs(trace_form(a, b, rho) - naive) < 1e-13


def test_trace_form_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        trace_form(np.eye(2), np.eye(3))


def test_eigenspaces_groups_degenerate_levels():
    groups = eigenspaces(np.diag([1.0, 0.0, 1.0 + 1e-12, 3.0]))
    assert [basis.shape[1] for _, basis in groups] == [1, 2, 1]
    assert groups[1][0] == pytest.approx(1.0)
