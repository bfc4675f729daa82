import numpy as np
import pytest

from workstats.efficacy import (LOG_UNDERFLOW, EfficacyTotal, mode_amplitudes, mode_efficacy,
                                mode_efficacy_biorthogonal, mode_log_efficacy, total_efficacy)
from workstats.ising import IsingParams, mode_coefficients
from workstats.operators import mat_exp

MOMENTA = np.linspace(0.02, np.pi - 0.02, 40)
SZ = np.diag([1.0, -1.0])
SY = np.array([[0, -1j], [1j, 0]])


@pytest.mark.parametrize("h", [0.3, 0.9, 1.7])
@pytest.mark.parametrize("gamma", [0.5, 2.0, 5.0])
def test_mode_efficacy_is_one(h, gamma):
    for t in (0.1, 1.0, 3.0, 20.0):
        values = mode_efficacy(MOMENTA, IsingParams(h=h, gamma=gamma, t=t))
        np.testing.assert_allclose(values, 1.0, atol=1e-10)


def test_total_efficacy_without_monitoring():
    for t in (0.0, 0.5, 2.0, 10.0):
        total = total_efficacy(IsingParams(h=0.5, gamma=0.0, t=t))
        assert total.gamma_t == pytest.approx(1.0, abs=1e-12)
        assert total.size == 100


def test_total_efficacy_with_monitoring():
    for gamma in (2.0, 5.0):
        total = total_efficacy(IsingParams(h=0.5, gamma=gamma, t=1.5), size=64)
        assert total.log_gamma_t == pytest.approx(0.0, abs=1e-8)
        assert not total.underflow


def test_finite_chain_uses_its_length():
    total = total_efficacy(IsingParams(h=0.5, gamma=2.0, t=1.0, L=8), size=1000)
    assert total.size == 8
    assert total.gamma_t == pytest.approx(1.0, abs=1e-10)


def adjoint_generator(mc, i):
    """h^dag = chi_bar (1 - sz) - xi_bar sy of mode i, constant included."""
    return mc.chi_bar[i] * (np.eye(2) - SZ) - mc.xi_bar[i] * SY


def test_forward_amplitudes_match_matrix_exponential():
    params = IsingParams(h=0.6, gamma=1.5, t=0.8)
    mc = mode_coefficients(MOMENTA, params)
    c0, c1 = mode_amplitudes(MOMENTA, params).unscaled()
    for i in range(len(MOMENTA)):
        expected = mat_exp(adjoint_generator(mc, i), 1j * params.t) @ np.array([1.0, 1j * mc.alpha[i]])
        assert c0[i] == pytest.approx(expected[0], abs=1e-10)
        assert c1[i] == pytest.approx(expected[1], abs=1e-10)


@pytest.mark.parametrize("h,gamma,t", [(0.6, 1.5, 0.8), (0.3, 5.0, 3.0), (1.7, 2.0, 40.0), (0.4, 3.0, 5000.0)])
def test_backward_amplitudes_are_conjugate(h, gamma, t):
    amplitudes = mode_amplitudes(MOMENTA, IsingParams(h=h, gamma=gamma, t=t))
    np.testing.assert_allclose(amplitudes.D0, np.conj(amplitudes.C0), atol=1e-12)
    np.testing.assert_allclose(amplitudes.D1, np.conj(amplitudes.C1), atol=1e-12)


def test_biorthogonal_variant_matches_matrix_exponential():
    params = IsingParams(h=0.7, gamma=2.5, t=1.2)
    mc = mode_coefficients(MOMENTA, params)
    values = mode_efficacy_biorthogonal(MOMENTA, params)
    for i in range(len(MOMENTA)):
        c = mat_exp(adjoint_generator(mc, i), 1j * params.t) @ np.array([1.0, 1j * mc.alpha[i]])
        decay = mc.decay[i] * params.t
        expected = (np.exp(-4.0 * (mc.Q[i] ** 2).real * decay / mc.D[i]) * np.vdot(c, c).real
                    / (1.0 + abs(mc.alpha[i]) ** 2 * np.exp(-4.0 * decay)))
        assert values[i] == pytest.approx(expected, rel=1e-10)


def test_biorthogonal_variant_at_gapless_momentum():
    params = IsingParams(h=0.5, gamma=2.0, t=0.1)
    k = np.array([np.pi / 3])
    assert mode_efficacy_biorthogonal(k, params)[0] == pytest.approx(1.1987, rel=1e-3)
    assert mode_efficacy_biorthogonal(k, params.with_(t=1.0))[0] == pytest.approx(10.756, rel=1e-3)


def test_amplitudes_stay_finite_at_late_times():
    amplitudes = mode_amplitudes(MOMENTA, IsingParams(h=0.4, gamma=3.0, t=5000.0))
    for values in (amplitudes.C0, amplitudes.C1, amplitudes.D0, amplitudes.D1, amplitudes.mode_efficacy):
        assert np.all(np.isfinite(values))
    np.testing.assert_allclose(amplitudes.mode_efficacy, 1.0, atol=1e-8)


def test_log_efficacy_is_zero():
    values = mode_log_efficacy(MOMENTA, IsingParams(h=0.5, gamma=2.0, t=2.0))
    np.testing.assert_allclose(values, 0.0, atol=1e-10)


def test_biorthogonal_variant_without_monitoring():
    values = mode_efficacy_biorthogonal(MOMENTA, IsingParams(h=0.5, gamma=0.0, t=1.3))
    np.testing.assert_allclose(values, 1.0, atol=1e-10)


def test_biorthogonal_variant_differs_under_monitoring():
    params = IsingParams(h=0.5, gamma=2.0, t=1.0)
    values = mode_efficacy_biorthogonal(MOMENTA, params)
    assert np.all(np.isfinite(values))
    assert np.max(np.abs(values - 1.0)) > 1e-6


def test_underflow_is_reported_as_nan_gamma():
    total = EfficacyTotal(log_gamma_t=LOG_UNDERFLOW - 1.0, gamma_t=float("nan"), size=100)
    assert total.underflow
    assert not EfficacyTotal(log_gamma_t=0.0, gamma_t=1.0, size=100).underflow
