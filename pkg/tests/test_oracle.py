import numpy as np
import pytest

from workstats.efficacy import mode_efficacy
from workstats.errors import InvalidInputError, ResourceLimitError
from workstats.ising import (IsingParams, average_work_density, generating_function, ground_energy_density,
                             mode_coefficients, mode_work_moments, noclick_log_probability_density,
                             work_variance_density)
from workstats.noclick import noclick_probability, noclick_propagator, ramsey_generating_function
from workstats.operators import is_hermitian
from workstats.oracle import (FockQuantity, fock_mode_hamiltonian, mode_fock_oracle, parity_operator,
                              spin_chain_ground_state, spin_chain_hamiltonian, spin_chain_jump_model,
                              spin_chain_moments, spin_chain_oracle)
from workstats.verify import CHAIN_POINTS, CHAIN_U, FOCK_GRID, FOCK_MOMENTA


@pytest.mark.parametrize("h,gamma,t", FOCK_GRID)
def test_fock_oracle_matches_closed_forms(h, gamma, t):
    params = IsingParams(h=h, gamma=gamma, t=t)
    w, var = mode_work_moments(FOCK_MOMENTA, params)
    efficacy = mode_efficacy(FOCK_MOMENTA, params)
    for i, k in enumerate(FOCK_MOMENTA):
        assert mode_fock_oracle(k, params, quantity=FockQuantity.AVG_WORK) == pytest.approx(w[i], abs=1e-8)
        assert mode_fock_oracle(k, params, quantity="variance_mode") == pytest.approx(var[i], abs=1e-8)
        assert mode_fock_oracle(k, params, quantity=FockQuantity.EFFICACY) == pytest.approx(efficacy[i], abs=1e-8)


@pytest.mark.parametrize("h,gamma,t", FOCK_GRID)
def test_fock_propagator_keeps_parity(h, gamma, t):
    params = IsingParams(h=h, gamma=gamma, t=t)
    for k in FOCK_MOMENTA:
        assert mode_fock_oracle(k, params, quantity=FockQuantity.ODD_LEAKAGE) <= 1e-12


def test_constant_shift_cancels_from_efficacy():
    params = IsingParams(h=0.5, gamma=2.0, t=1.5)
    mc = mode_coefficients(FOCK_MOMENTA, params)
    efficacy = mode_efficacy(FOCK_MOMENTA, params)
    for i, k in enumerate(FOCK_MOMENTA):
        plain = mode_fock_oracle(k, params, quantity=FockQuantity.EFFICACY)
        for shift in (mc.E0_shift[i], mc.E0_gamma[i], 0.7 - 0.4j):
            shifted = mode_fock_oracle(k, params, quantity=FockQuantity.EFFICACY, shift=shift)
            assert shifted == pytest.approx(plain, rel=1e-10)
        assert plain == pytest.approx(efficacy[i], abs=1e-10)


def test_constant_shift_leaves_work_unchanged():
    params = IsingParams(h=0.9, gamma=5.0, t=1.0)
    for k in FOCK_MOMENTA:
        assert (mode_fock_oracle(k, params, shift=-2.5j)
                == pytest.approx(mode_fock_oracle(k, params), abs=1e-10))


def test_fock_amplitudes_match_rotated_state():
    params = IsingParams(h=0.5, gamma=2.0, t=1.0)
    mc = mode_coefficients(FOCK_MOMENTA, params)
    v = mc.rotation()
    phase = np.exp(-2j * mc.eps_eff * params.t)
    for i, k in enumerate(FOCK_MOMENTA):
        psi = v[i] @ np.array([mc.X[i], 1j * mc.Y[i] * phase[i]])
        psi /= np.linalg.norm(psi)
        amplitudes = mode_fock_oracle(k, params, quantity=FockQuantity.AMPLITUDES)
        assert abs(np.vdot(amplitudes, psi)) == pytest.approx(1.0, abs=1e-10)


def test_fock_hamiltonian_is_hermitian_without_monitoring():
    params = IsingParams(h=0.4, gamma=3.0, t=1.0)
    assert is_hermitian(fock_mode_hamiltonian(1.0, params, gamma=0.0))
    assert not is_hermitian(fock_mode_hamiltonian(1.0, params))


def test_fock_ground_energy():
    params = IsingParams(h=0.4, gamma=0.0, t=1.0)
    energies = np.linalg.eigvalsh(fock_mode_hamiltonian(1.0, params))
    assert energies[0] == pytest.approx(-mode_coefficients(np.array([1.0]), params).eps_i[0])


@pytest.mark.parametrize("h,gamma,t", CHAIN_POINTS)
def test_spin_chain_matches_generating_function(h, gamma, t):
    params = IsingParams(h=h, gamma=gamma, t=t, L=6)
    for u in CHAIN_U:
        assert abs(spin_chain_oracle(6, params, u=u) - generating_function(params, u)) < 1e-6


def test_spin_chain_generating_function_at_imaginary_argument():
    params = IsingParams(h=0.8, gamma=1.0, t=0.5, L=4)
    assert abs(spin_chain_oracle(4, params, u=-0.4j) - generating_function(params, -0.4j)) < 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("h,gamma,t", CHAIN_POINTS)
def test_spin_chain_moments(h, gamma, t):
    params = IsingParams(h=h, gamma=gamma, t=t, L=6)
    mean, variance = spin_chain_moments(6, params)
    assert mean == pytest.approx(6 * average_work_density(params), abs=1e-4)
    assert variance == pytest.approx(6 * work_variance_density(params), abs=1e-4)


def test_spin_chain_ground_state_is_even_and_matches_modes():
    params = IsingParams(h=0.7, gamma=0.0, t=0.0, L=6)
    psi = spin_chain_ground_state(6, params.J, params.h)
    assert np.vdot(psi, parity_operator(6) @ psi).real == pytest.approx(1.0)
    energy = np.vdot(psi, spin_chain_hamiltonian(6, params.J, params.h) @ psi).real
    assert energy == pytest.approx(6 * ground_energy_density(params), abs=1e-10)


def test_spin_chain_noclick_probability():
    for h, gamma, t in CHAIN_POINTS:
        params = IsingParams(h=h, gamma=gamma, t=t, L=6)
        model = spin_chain_jump_model(6, params)
        psi = spin_chain_ground_state(6, params.J, h)
        probability = noclick_probability(model, np.outer(psi, psi.conj()), t)
        assert np.log(probability) / 6 == pytest.approx(noclick_log_probability_density(params), abs=1e-8)


def test_spin_chain_efficacy_is_one():
    params = IsingParams(h=0.5, gamma=2.0, t=1.0, L=6)
    model = spin_chain_jump_model(6, params)
    psi = spin_chain_ground_state(6, params.J, params.h)
    k = noclick_propagator(model, params.t)
    forward = k @ psi
    backward = k.conj().T @ psi
    assert np.vdot(backward, backward).real / np.vdot(forward, forward).real == pytest.approx(1.0, abs=1e-10)


def test_ramsey_readout_on_spin_chain():
    params = IsingParams(h=0.6, gamma=1.5, t=0.8, L=4)
    model = spin_chain_jump_model(4, params)
    psi = spin_chain_ground_state(4, params.J, params.h)
    for u in (-0.5, 0.7):
        value = ramsey_generating_function(model, model.h, model.h, psi, params.t, u)
        assert abs(value - generating_function(params, u)) < 1e-8


def test_chain_length_limits():
    params = IsingParams(h=0.5, gamma=1.0, t=1.0)
    with pytest.raises(ResourceLimitError):
        spin_chain_oracle(14, params)
    with pytest.raises(InvalidInputError):
        spin_chain_oracle(5, params)
