"""
Random operators and protocols for the verification grid and the tests.
"""
import numpy as np
from scipy.stats import unitary_group

from workstats.noclick import JumpModel
from workstats.operators import OperatorMatrix
from workstats.tpm import (KrausSet, MeasurementEvent, TrajectoryProtocol, kraus_set, projective_measurement,
                           reset_channel, unitary_segment)


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> OperatorMatrix:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def random_unitary(rng: np.random.Generator, dim: int) -> OperatorMatrix:
    return unitary_group.rvs(dim, random_state=rng)


def random_unital_kraus(rng: np.random.Generator, dim: int, count: int = 3) -> KrausSet:
    """A mixture of unitaries sqrt(p_r) U_r, which is unital."""
    p = rng.dirichlet(np.ones(count))
    return kraus_set([np.sqrt(p_r) * random_unitary(rng, dim) for p_r in p])


def random_kraus(rng: np.random.Generator, dim: int, count: int = 2) -> KrausSet:
    """Generic (non-unital) Kraus operators: the blocks of a random isometry C^d -> C^(count d)."""
    stacked = random_unitary(rng, count * dim)[:, :dim]
    return kraus_set([stacked[r * dim:(r + 1) * dim] for r in range(count)])


def random_jump_model(rng: np.random.Generator, dim: int, jumps: int = 2, rate: float = 0.5) -> JumpModel:
    ops = np.sqrt(rate) * (rng.normal(size=(jumps, dim, dim)) + 1j * rng.normal(size=(jumps, dim, dim))) / np.sqrt(dim)
    return JumpModel(h=random_hermitian(rng, dim), jumps=ops)


def random_unital_protocol(rng: np.random.Generator, dim: int = 3, measurements: int = 2) -> TrajectoryProtocol:
    """Unitaries interleaved with projective or unitary-mixture measurements."""
    segments = [unitary_segment(unitary=random_unitary(rng, dim))]
    for j in range(measurements):
        if rng.random() < 0.5:
            kraus = projective_measurement(basis=random_unitary(rng, dim))
        else:
            kraus = random_unital_kraus(rng, dim)
        segments.append(MeasurementEvent(kraus=kraus, time=float(j + 1)))
        segments.append(unitary_segment(generator=random_hermitian(rng, dim), duration=0.3))
    return TrajectoryProtocol(h_i=random_hermitian(rng, dim), h_f=random_hermitian(rng, dim), segments=tuple(segments))


def random_protocol(rng: np.random.Generator, dim: int, measurements: int) -> TrajectoryProtocol:
    """Unitaries interleaved with projective, unitary-mixture or generic non-unital measurements."""
    segments = [unitary_segment(unitary=random_unitary(rng, dim))]
    for j in range(measurements):
        choice = rng.integers(3)
        if choice == 0:
            kraus = projective_measurement(basis=random_unitary(rng, dim))
        elif choice == 1:
            kraus = random_unital_kraus(rng, dim, 2)
        else:
            kraus = random_kraus(rng, dim, 2)
        segments.append(MeasurementEvent(kraus=kraus, time=float(j + 1)))
        segments.append(unitary_segment(generator=random_hermitian(rng, dim), duration=0.5))
    return TrajectoryProtocol(h_i=random_hermitian(rng, dim), h_f=random_hermitian(rng, dim), segments=tuple(segments))


def reset_protocol() -> TrajectoryProtocol:
    """A qubit with H_i = H_f = sz reset to |0> at t = 1, which breaks the Jarzynski equality."""
    sz = np.diag([1.0, -1.0])
    return TrajectoryProtocol(h_i=sz, h_f=sz, segments=(MeasurementEvent(kraus=reset_channel(2), time=1.0),))
