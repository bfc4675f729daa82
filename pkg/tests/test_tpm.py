import numpy as np
import pytest

from workstats.errors import DegenerateTrajectoryError, InvalidInputError, ResourceLimitError
from workstats.operators import mat_exp, thermal_state
from workstats.samples import (random_hermitian, random_kraus, random_protocol, random_unital_protocol,
                               random_unitary, reset_protocol)
from workstats.tpm import (MeasurementEvent, TrajectoryProtocol, apply_channel, generating_function,
                           jarzynski_report, kraus_set, postselect_generating_function, projective_measurement,
                           record_count, record_operator, reset_channel, sum_over_records, unitary_segment,
                           work_distribution, work_distribution_from_atoms)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def flip_protocol() -> TrajectoryProtocol:
    return TrajectoryProtocol(h_i=SZ, h_f=SZ, segments=(unitary_segment(unitary=SX),))


def test_record_operator_single_unitary(rng):
    u = random_unitary(rng, 3)
    protocol = TrajectoryProtocol(h_i=np.eye(3), h_f=np.eye(3), segments=(unitary_segment(unitary=u),))
    assert np.allclose(record_operator(protocol, ()), u)


def test_record_operator_projector():
    kraus = projective_measurement(2)
    protocol = TrajectoryProtocol(h_i=SZ, h_f=SZ, segments=(unitary_segment(unitary=np.eye(2)),
                                                            MeasurementEvent(kraus=kraus, time=1.0)))
    assert np.allclose(record_operator(protocol, (1,)), np.diag([0.0, 1.0]))


def test_record_operator_matches_hand_product(rng):
    u0, u1, u2 = (random_unitary(rng, 3) for _ in range(3))
    first, second = random_kraus(rng, 3, 2), projective_measurement(basis=random_unitary(rng, 3))
    protocol = TrajectoryProtocol(h_i=np.eye(3), h_f=np.eye(3), segments=(
        unitary_segment(unitary=u0), MeasurementEvent(kraus=first, time=0.5), unitary_segment(unitary=u1),
        MeasurementEvent(kraus=second, time=1.5), unitary_segment(unitary=u2)))
    expected = u2 @ second.operators[2] @ u1 @ first.operators[1] @ u0
    np.testing.assert_allclose(record_operator(protocol, (1, 2)), expected, atol=1e-14)


def test_record_operator_rejects_unknown_label():
    protocol = TrajectoryProtocol(h_i=SZ, h_f=SZ, segments=(MeasurementEvent(kraus=projective_measurement(2), time=1),))
    with pytest.raises(InvalidInputError):
        record_operator(protocol, (5,))


def test_protocol_requires_increasing_times():
    kraus = projective_measurement(2)
    with pytest.raises(InvalidInputError):
        TrajectoryProtocol(h_i=SZ, h_f=SZ, segments=(MeasurementEvent(kraus=kraus, time=1.0),
                                                     MeasurementEvent(kraus=kraus, time=1.0)))


def test_identity_protocol_gives_delta_at_zero(rng):
    h = random_hermitian(rng, 3)
    distribution = work_distribution(TrajectoryProtocol(h_i=h, h_f=h), beta=0.4)
    assert len(distribution.atoms) == 1
    w, p = distribution.atoms[0]
    assert w == pytest.approx(0.0, abs=1e-9)
    assert p == pytest.approx(1.0)


def test_spin_flip_atoms():
    distribution = work_distribution(flip_protocol(), beta=0.0)
    assert distribution.atoms == [pytest.approx((-2.0, 0.5)), pytest.approx((2.0, 0.5))]


def test_spin_flip_generating_function():
    for u in (0.0, 0.3, 1.7):
        assert generating_function(flip_protocol(), 0.0, u) == pytest.approx(np.cos(2 * u), abs=1e-12)


def test_unitary_protocol_jarzynski(rng):
    h_i, h_f = random_hermitian(rng, 4), random_hermitian(rng, 4)
    protocol = TrajectoryProtocol(h_i=h_i, h_f=h_f, segments=(unitary_segment(unitary=random_unitary(rng, 4)),))
    report = jarzynski_report(protocol, 0.9)
    assert report.unital
    assert report.deviation <= 1e-10
    z_ratio = thermal_state(h_f, 0.9).partition_function / thermal_state(h_i, 0.9).partition_function
    assert report.free_energy_ratio == pytest.approx(z_ratio)


def test_normalization_and_fourier_consistency(rng):
    for _ in range(50):
        protocol = random_protocol(rng, int(rng.integers(2, 7)), int(rng.integers(0, 4)))
        beta = float(rng.uniform(0.0, 2.0))
        distribution = work_distribution(protocol, beta)
        assert np.sum(distribution.probability) == pytest.approx(1.0, abs=1e-10)
        assert abs(generating_function(protocol, beta, 0.0) - 1.0) < 1e-12
        for u in rng.uniform(-3.0, 3.0, size=20):
            assert abs(generating_function(protocol, beta, u) - distribution.characteristic(u)) < 1e-9


def test_unital_protocols_satisfy_jarzynski(rng):
    for _ in range(100):
        protocol = random_unital_protocol(rng)
        report = jarzynski_report(protocol, float(rng.uniform(0.1, 2.0)))
        assert report.unital
        assert report.deviation <= 1e-8


def test_projective_measurements_satisfy_jarzynski(rng):
    protocol = TrajectoryProtocol(h_i=random_hermitian(rng, 3), h_f=random_hermitian(rng, 3), segments=(
        unitary_segment(unitary=random_unitary(rng, 3)),
        MeasurementEvent(kraus=projective_measurement(3), time=1.0),
        unitary_segment(unitary=random_unitary(rng, 3))))
    assert jarzynski_report(protocol, 1.3).deviation <= 1e-8


def test_reset_channel_breaks_jarzynski():
    report = jarzynski_report(reset_protocol(), 1.0)
    assert not report.unital
    assert report.deviation > 0.01
    # G(-i beta) = 2 e^{-1} / (e + e^{-1}) for the qubit reset
    assert report.g.real == pytest.approx(2 * np.exp(-1) / (np.exp(1) + np.exp(-1)))


def test_reset_channel_algebra():
    kraus = reset_channel(2)
    assert np.allclose(sum(m.conj().T @ m for m in kraus.operators), np.eye(2))
    assert np.allclose(sum(m @ m.conj().T for m in kraus.operators), np.diag([2.0, 0.0]))
    assert not kraus.is_unital
    assert not reset_channel(3).is_unital


def test_reset_channel_output(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    assert np.allclose(apply_channel(reset_channel(3), rho), np.diag([1.0, 0.0, 0.0]))


def test_reset_channel_rejects_bad_target():
    with pytest.raises(InvalidInputError):
        reset_channel(2, target=2)


def test_kraus_set_rejects_incomplete():
    with pytest.raises(InvalidInputError):
        kraus_set([np.diag([1.0, 0.5])])


def test_record_sum_completeness(rng):
    protocol = random_protocol(rng, 3, 3)
    total = sum_over_records(protocol, lambda t: t.conj().T @ t)
    assert np.max(np.abs(total - np.eye(3))) < 1e-9


def test_record_cap_is_enforced():
    kraus = projective_measurement(4)
    protocol = TrajectoryProtocol(h_i=np.eye(4), h_f=np.eye(4), segments=tuple(
        MeasurementEvent(kraus=kraus, time=float(j + 1)) for j in range(5)))
    assert record_count(protocol) == 1024
    with pytest.raises(ResourceLimitError):
        work_distribution(protocol, 1.0, cap=1000)


def test_results_do_not_depend_on_thread_count(rng):
    dim = 7
    protocol = TrajectoryProtocol(h_i=random_hermitian(rng, dim), h_f=random_hermitian(rng, dim), segments=(
        unitary_segment(unitary=random_unitary(rng, dim)),
        MeasurementEvent(kraus=projective_measurement(basis=random_unitary(rng, dim)), time=1.0),
        MeasurementEvent(kraus=projective_measurement(basis=random_unitary(rng, dim)), time=2.0),
        MeasurementEvent(kraus=projective_measurement(basis=random_unitary(rng, dim)), time=3.0)))
    assert record_count(protocol) > 256
    serial = work_distribution(protocol, 0.5, threads=1)
    parallel = work_distribution(protocol, 0.5, threads=4)
    assert np.array_equal(serial.work, parallel.work)
    assert np.array_equal(serial.probability, parallel.probability)


def test_moments_match_channel_computation(rng):
    dim, beta = 4, 0.6
    u0, u1 = random_unitary(rng, dim), random_unitary(rng, dim)
    kraus = random_kraus(rng, dim, 3)
    h_i, h_f = random_hermitian(rng, dim), random_hermitian(rng, dim)
    protocol = TrajectoryProtocol(h_i=h_i, h_f=h_f, segments=(
        unitary_segment(unitary=u0), MeasurementEvent(kraus=kraus, time=1.0), unitary_segment(unitary=u1)))
    distribution = work_distribution(protocol, beta)

    def evolve(rho):
        return u1 @ apply_channel(kraus, u0 @ rho @ u0.conj().T) @ u1.conj().T

    energies, vectors = np.linalg.eigh(h_i)
    populations = np.exp(-beta * energies) / np.sum(np.exp(-beta * energies))
    mean = second = 0.0
    for e_n, p_n, v in zip(energies, populations, vectors.T):
        final = evolve(np.outer(v, v.conj()))
        f1 = np.trace(h_f @ final).real
        f2 = np.trace(h_f @ h_f @ final).real
        mean += p_n * (f1 - e_n)
        second += p_n * (f2 - 2 * e_n * f1 + e_n ** 2)
    assert distribution.mean() == pytest.approx(mean, abs=1e-10)
    assert distribution.moment(2) == pytest.approx(second, abs=1e-10)


def test_degenerate_levels_are_basis_independent(rng):
    rotation = np.eye(3, dtype=complex)
    rotation[:2, :2] = random_unitary(rng, 2)
    h_diag = np.diag([0.0, 0.0, 1.0]).astype(complex)
    h_rotated = rotation @ h_diag @ rotation.conj().T
    u = random_unitary(rng, 3)
    plain = work_distribution(TrajectoryProtocol(h_i=h_diag, h_f=h_diag, segments=(unitary_segment(unitary=u),)), 0.8)
    rotated = work_distribution(TrajectoryProtocol(h_i=h_rotated, h_f=h_rotated,
                                                   segments=(unitary_segment(unitary=u),)), 0.8)
    np.testing.assert_allclose(plain.work, rotated.work, atol=1e-9)
    np.testing.assert_allclose(plain.probability, rotated.probability, atol=1e-12)


def test_postselected_generating_function_single_projection():
    protocol = TrajectoryProtocol(h_i=SZ, h_f=SZ, segments=(
        unitary_segment(unitary=HADAMARD), MeasurementEvent(kraus=projective_measurement(2), time=1.0)))
    assert postselect_generating_function(protocol, 0.0, (0,), 0.0) == pytest.approx(1.0)
    for u in (0.4, 1.1):
        expected = np.exp(-1j * u) * np.cos(u)
        assert postselect_generating_function(protocol, 0.0, (0,), u) == pytest.approx(expected, abs=1e-12)


def test_postselection_on_impossible_record():
    protocol = TrajectoryProtocol(h_i=SZ, h_f=SZ, segments=(MeasurementEvent(kraus=projective_measurement(2), time=1),))
    # at large beta the initial state is |1>, so outcome 0 never occurs
    with pytest.raises(DegenerateTrajectoryError):
        postselect_generating_function(protocol, 1e4, (0,), 0.3)


def test_atoms_are_merged_and_validated():
    distribution = work_distribution_from_atoms([1.0, 1.0 + 1e-12, 2.0], [0.25, 0.25, 0.5])
    assert len(distribution.atoms) == 2
    assert distribution.atoms[0] == pytest.approx((1.0, 0.5))
    with pytest.raises(InvalidInputError):
        work_distribution_from_atoms([0.0, 1.0], [0.5, 0.4])
    with pytest.raises(InvalidInputError):
        work_distribution_from_atoms([0.0, 1.0], [1.1, -0.1])


def test_generator_segment_matches_exponential(rng):
    h = random_hermitian(rng, 3)
    segment = unitary_segment(generator=h, duration=0.7)
    np.testing.assert_allclose(segment.unitary, mat_exp(h, -0.7j), atol=1e-14)
    with pytest.raises(InvalidInputError):
        unitary_segment(unitary=np.eye(2), generator=np.eye(2))
