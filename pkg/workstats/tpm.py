"""
Two-point-measurement (TPM) work statistics for finite-dimensional protocols made of
unitary segments interleaved with generalized measurements.

The engine enumerates every measurement record exactly; it is the ground truth the no-click
module and the analytic Ising layer are checked against, so it never samples.
"""
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Iterator, Sequence, TypeVar

import numpy as np

from workstats.config import CONFIG
from workstats.errors import DegenerateTrajectoryError, InvalidInputError, ResourceLimitError
from workstats.operators import (OperatorMatrix, as_operator, eigenspaces, is_hermitian, is_unitary, mat_exp,
                                 thermal_state, trace_form)

logger = logging.getLogger(__name__)

MeasurementRecord = tuple[Hashable, ...]

T = TypeVar("T")


@dataclass(frozen=True, eq=False)
class KrausSet:
    operators: tuple[OperatorMatrix, ...]
    labels: tuple[Hashable, ...]
    # Tolerance used for the completeness and unitality checks
    tol: float
    is_unital: bool

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def operator(self, label: Hashable) -> OperatorMatrix:
        try:
            return self.operators[self.labels.index(label)]
        except ValueError:
            raise InvalidInputError(f"outcome label {label!r} is not one of {list(self.labels)}") from None


def kraus_set(operators: Sequence, labels: Sequence[Hashable] | None = None, tol: float | None = None) -> KrausSet:
    """
    Validates a list of measurement operators {M_r} and records whether the channel is unital.

    :param tol: max-norm tolerance for sum M_r^dagger M_r = I, defaults to CONFIG.herm_tol
    """
    tol = CONFIG.herm_tol if tol is None else tol
    if len(operators) == 0:
        raise InvalidInputError("a Kraus set needs at least one operator")
    ops = tuple(as_operator(op, f"M[{r}]") for r, op in enumerate(operators))
    dim = ops[0].shape[0]
    if any(op.shape != (dim, dim) for op in ops):
        raise InvalidInputError("all Kraus operators must have the same dimension")

    labels = tuple(range(len(ops))) if labels is None else tuple(labels)
    if len(labels) != len(ops) or len(set(labels)) != len(labels):
        raise InvalidInputError("Kraus labels must be unique, one per operator")

    identity = np.eye(dim)
    completeness = max_abs(sum(op.conj().T @ op for op in ops) - identity)
    if completeness > tol:
        raise InvalidInputError(f"Kraus operators are not complete: |sum M^dag M - I| = {completeness:.3e} > {tol:.3e}")
    unitality = max_abs(sum(op @ op.conj().T for op in ops) - identity)
    return KrausSet(operators=ops, labels=labels, tol=tol, is_unital=bool(unitality <= tol))


def projective_measurement(dim: int | None = None, basis=None) -> KrausSet:
    """Rank-one projectors onto the columns of ``basis`` (computational basis by default)."""
    if basis is None:
        if dim is None or dim < 1:
            raise InvalidInputError("projective_measurement needs a dimension or a basis")
        basis = np.eye(dim)
    basis = as_operator(basis, "basis")
    if not is_unitary(basis):
        raise InvalidInputError("measurement basis must be orthonormal")
    return kraus_set([np.outer(basis[:, r], basis[:, r].conj()) for r in range(basis.shape[0])])


def reset_channel(dim: int, target: int = 0) -> KrausSet:
    """M_r = |target><r|, which sends every state to |target><target|."""
    if dim < 2:
        raise InvalidInputError("reset channel needs dim >= 2")
    if not 0 <= target < dim:
        raise InvalidInputError(f"target {target} out of range for dim {dim}")
    ops = []
    for r in range(dim):
        op = np.zeros((dim, dim), dtype=np.complex128)
        op[target, r] = 1.0
        ops.append(op)
    return kraus_set(ops)


def apply_channel(kraus: KrausSet, rho) -> OperatorMatrix:
    rho = as_operator(rho, "rho")
    return sum(op @ rho @ op.conj().T for op in kraus.operators)


@dataclass(frozen=True, eq=False)
class UnitarySegment:
    unitary: OperatorMatrix
    # Set when the segment was built from a Hermitian generator
    generator: OperatorMatrix | None = None
    duration: float | None = None


def unitary_segment(unitary=None, generator=None, duration: float | None = None) -> UnitarySegment:
    """Either an explicit unitary or exp(-i generator duration)."""
    if (unitary is None) == (generator is None):
        raise InvalidInputError("give exactly one of unitary or generator")
    if generator is not None:
        generator = as_operator(generator, "generator")
        if not is_hermitian(generator):
            raise InvalidInputError("segment generator must be Hermitian")
        if duration is None or duration < 0:
            raise InvalidInputError("a generator segment needs a non-negative duration")
        return UnitarySegment(unitary=mat_exp(generator, -1j * duration), generator=generator,
                              duration=float(duration))
    unitary = as_operator(unitary, "unitary")
    if not is_unitary(unitary):
        raise InvalidInputError("segment matrix is not unitary")
    return UnitarySegment(unitary=unitary)


@dataclass(frozen=True, eq=False)
class MeasurementEvent:
    kraus: KrausSet
    time: float


@dataclass(frozen=True, eq=False)
class TrajectoryProtocol:
    h_i: OperatorMatrix
    h_f: OperatorMatrix
    # Applied in order: the first segment acts first on the initial state
    segments: tuple[UnitarySegment | MeasurementEvent, ...] = field(default_factory=tuple)
    t_i: float = 0.0
    t_f: float | None = None

    def __post_init__(self):
        h_i = as_operator(self.h_i, "H_i")
        h_f = as_operator(self.h_f, "H_f")
        if not is_hermitian(h_i) or not is_hermitian(h_f):
            raise InvalidInputError("H_i and H_f must be Hermitian")
        if h_i.shape != h_f.shape:
            raise InvalidInputError("H_i and H_f must have the same dimension")
        object.__setattr__(self, "h_i", h_i)
        object.__setattr__(self, "h_f", h_f)
        object.__setattr__(self, "segments", tuple(self.segments))

        previous = self.t_i
        for j, segment in enumerate(self.segments):
            if isinstance(segment, UnitarySegment):
                dim = segment.unitary.shape[0]
            elif isinstance(segment, MeasurementEvent):
                dim = segment.kraus.dim
                if not segment.time > previous:
                    raise InvalidInputError(f"segments[{j}]: measurement time {segment.time} does not follow {previous}")
                previous = segment.time
            else:
                raise InvalidInputError(f"segments[{j}]: unsupported segment type {type(segment).__name__}")
            if dim != self.dim:
                raise InvalidInputError(f"segments[{j}]: dimension {dim} does not match H_i ({self.dim})")
        if self.t_f is not None and not self.t_f > previous:
            raise InvalidInputError(f"t_f = {self.t_f} must come after the last measurement at {previous}")

    @property
    def dim(self) -> int:
        return self.h_i.shape[0]

    @property
    def events(self) -> list[MeasurementEvent]:
        return [s for s in self.segments if isinstance(s, MeasurementEvent)]

    @property
    def is_unital(self) -> bool:
        return all(event.kraus.is_unital for event in self.events)


@dataclass(frozen=True, eq=False)
class WorkDistribution:
    work: np.ndarray
    probability: np.ndarray

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.work.tolist(), self.probability.tolist()))

    def moment(self, order: int) -> float:
        return float(np.sum(self.probability * self.work ** order))

    def mean(self) -> float:
        return self.moment(1)

    def variance(self) -> float:
        return self.moment(2) - self.mean() ** 2

    def characteristic(self, u: complex) -> complex:
        """Sum of p exp(-i w u); accepts complex u."""
        return complex(np.sum(self.probability * np.exp(-1j * complex(u) * self.work)))


def work_distribution_from_atoms(work, probability, norm_tol: float | None = None) -> WorkDistribution:
    """
    Sorts, merges and validates a list of Dirac atoms.

    Atoms closer than CONFIG.merge_tol are combined at their probability-weighted mean work.
    """
    norm_tol = CONFIG.herm_tol if norm_tol is None else norm_tol
    work = np.asarray(work, dtype=float).ravel()
    probability = np.asarray(probability, dtype=float).ravel()
    if np.any(probability < -1e-12):
        raise InvalidInputError(f"negative atom probability {probability.min():.3e}")
    probability = np.clip(probability, 0.0, None)

    order = np.argsort(work, kind="stable")
    work, probability = work[order], probability[order]
    merged_w: list[float] = []
    merged_p: list[float] = []
    start = 0
    for i in range(1, len(work) + 1):
        if i == len(work) or work[i] - work[start] > CONFIG.merge_tol:
            p = probability[start:i]
            total = float(np.sum(p))
            merged_w.append(float(np.dot(p, work[start:i]) / total) if total > 0 else float(work[start]))
            merged_p.append(total)
            start = i

    keep = np.asarray(merged_p) > CONFIG.atom_floor
    dist = WorkDistribution(work=np.asarray(merged_w)[keep], probability=np.asarray(merged_p)[keep])
    total = float(np.sum(dist.probability))
    if abs(total - 1.0) > norm_tol:
        raise InvalidInputError(f"work distribution is not normalized: sum p = {total:.15g}")
    return dist


@dataclass(frozen=True)
class JarzynskiReport:
    g: complex
    free_energy_ratio: float
    unital: bool
    deviation: float


def record_count(protocol: TrajectoryProtocol) -> int:
    return math.prod(len(event.kraus.labels) for event in protocol.events)


def records(protocol: TrajectoryProtocol) -> Iterator[MeasurementRecord]:
    """All measurement records in lexicographic label order."""
    return itertools.product(*(event.kraus.labels for event in protocol.events))


def record_operator(protocol: TrajectoryProtocol, record: Sequence[Hashable]) -> OperatorMatrix:
    """
    Builds T = U_N M_{r_N} ... M_{r_1} U_0 for one record, the rightmost factor acting first.
    """
    record = tuple(record)
    events = protocol.events
    if len(record) != len(events):
        raise InvalidInputError(f"record has {len(record)} outcomes, protocol has {len(events)} measurements")
    result = np.eye(protocol.dim, dtype=np.complex128)
    outcomes = iter(record)
    for segment in protocol.segments:
        if isinstance(segment, UnitarySegment):
            result = segment.unitary @ result
        else:
            result = segment.kraus.operator(next(outcomes)) @ result
    return result


def _chunked(items: Iterable[T], size: int) -> Iterator[list[T]]:
    it = iter(items)
    while chunk := list(itertools.islice(it, size)):
        yield chunk


def sum_over_records(protocol: TrajectoryProtocol, term: Callable[[OperatorMatrix], T], cap: int | None = None,
                     threads: int | None = None) -> T:
    """
    Sums ``term(T_record)`` over every measurement record.

    Records are split into chunks of CONFIG.record_chunk and the partial sums are added in record
    order, so the result is bit-identical for any thread count.
    """
    cap = CONFIG.record_cap if cap is None else cap
    count = record_count(protocol)
    if count > cap:
        raise ResourceLimitError(f"protocol has {count} measurement records, more than the cap of {cap}")

    def chunk_sum(chunk: list[MeasurementRecord]):
        partial = None
        for record in chunk:
            value = term(record_operator(protocol, record))
            partial = value if partial is None else partial + value
        return partial

    threads = CONFIG.threads if threads is None else threads
    chunks = _chunked(records(protocol), CONFIG.record_chunk)
    if threads == 1 or count <= CONFIG.record_chunk:
        partials = map(chunk_sum, chunks)
        return _ordered_sum(partials)
    with ThreadPoolExecutor(max_workers=threads or None) as executor:
        return _ordered_sum(executor.map(chunk_sum, chunks))


def _ordered_sum(values: Iterable[T]) -> T:
    total = None
    for value in values:
        total = value if total is None else total + value
    return total


class _EnergyBases:
    """Eigenbases of H_i and H_f grouped into multiplets, for block-summed transition weights."""

    def __init__(self, h_i: OperatorMatrix, h_f: OperatorMatrix):
        initial = eigenspaces(h_i)
        final = eigenspaces(h_f)
        self.e_i = np.array([e for e, _ in initial])
        self.e_f = np.array([e for e, _ in final])
        self.v_i = np.hstack([basis for _, basis in initial])
        self.v_f_dag = np.hstack([basis for _, basis in final]).conj().T
        self.starts_i = np.cumsum([0] + [basis.shape[1] for _, basis in initial[:-1]])
        self.starts_f = np.cumsum([0] + [basis.shape[1] for _, basis in final[:-1]])

    def transition_weights(self, t: OperatorMatrix) -> np.ndarray:
        """K[m, n] = ||Pi_m T Pi_n||_F^2 summed over the multiplet bases."""
        w = np.abs(self.v_f_dag @ t @ self.v_i) ** 2
        return np.add.reduceat(np.add.reduceat(w, self.starts_f, axis=0), self.starts_i, axis=1)

    def atoms(self, weights: np.ndarray, beta: float, log_z: float, scale: float = 1.0,
              norm_tol: float | None = None) -> WorkDistribution:
        # per-state Boltzmann factor of each initial multiplet
        populations = np.exp(-beta * self.e_i - log_z)
        probability = weights * populations[np.newaxis, :] / scale
        work = self.e_f[:, np.newaxis] - self.e_i[np.newaxis, :]
        return work_distribution_from_atoms(work, probability, norm_tol)


def work_distribution(protocol: TrajectoryProtocol, beta: float, cap: int | None = None,
                      threads: int | None = None) -> WorkDistribution:
    """
    P(W) = sum_{m,n} delta(W - E_f(m) + E_i(n)) p_i(n) sum_records ||Pi_m T Pi_n||^2 for a thermal
    initial state of H_i.
    """
    thermal = thermal_state(protocol.h_i, beta)
    bases = _EnergyBases(protocol.h_i, protocol.h_f)
    weights = sum_over_records(protocol, bases.transition_weights, cap, threads)
    # incomplete Kraus ladders (checked to O(dt^2)) leak probability at the same order
    norm_tol = max(CONFIG.herm_tol, sum(event.kraus.tol for event in protocol.events))
    return bases.atoms(weights, beta, thermal.log_partition_function, norm_tol=norm_tol)


def postselected_work_distribution(h_i, h_f, beta: float, t: OperatorMatrix) -> WorkDistribution:
    """
    Work distribution conditioned on a single record operator ``t``, normalized by the probability
    Tr[t^dagger t rho_i] of that record.
    """
    h_i = as_operator(h_i, "H_i")
    h_f = as_operator(h_f, "H_f")
    thermal = thermal_state(h_i, beta)
    probability = trace_form(t.conj().T @ t, thermal.rho).real
    if probability < CONFIG.noclick_floor:
        raise DegenerateTrajectoryError(f"record probability {probability:.3e} is below {CONFIG.noclick_floor:.1e}")
    bases = _EnergyBases(h_i, h_f)
    return bases.atoms(bases.transition_weights(t), beta, thermal.log_partition_function, scale=probability)


def _initial_factor(h_i: OperatorMatrix, beta: float, u: complex) -> OperatorMatrix:
    """exp(i H_i u) exp(-beta H_i) / Z_i, with the exponents combined before exponentiating."""
    energies, vectors = np.linalg.eigh(h_i)
    exponents = -beta * energies
    log_z = np.max(exponents) + np.log(np.sum(np.exp(exponents - np.max(exponents))))
    diagonal = np.exp(1j * complex(u) * energies + exponents - log_z)
    return (vectors * diagonal) @ vectors.conj().T


def generating_function(protocol: TrajectoryProtocol, beta: float, u: complex, cap: int | None = None,
                        threads: int | None = None) -> complex:
    """
    G(u) = sum_records Tr[T^dagger exp(-i H_f u) T exp(i H_i u) rho_i]; u may be complex, and
    G(-i beta) is the Jarzynski average.
    """
    if not (beta >= 0 and np.isfinite(beta)):
        raise InvalidInputError(f"beta must be finite and non-negative, got {beta}")
    forward = mat_exp(protocol.h_f, -1j * complex(u))
    backward = _initial_factor(protocol.h_i, beta, u)

    def term(t: OperatorMatrix) -> complex:
        return trace_form(t.conj().T @ forward @ t, backward)

    return complex(sum_over_records(protocol, term, cap, threads))


def postselect_generating_function(protocol: TrajectoryProtocol, beta: float, record: Sequence[Hashable],
                                   u: complex) -> complex:
    """Generating function of the single ``record``, normalized by its probability."""
    t = record_operator(protocol, record)
    thermal = thermal_state(protocol.h_i, beta)
    probability = trace_form(t.conj().T @ t, thermal.rho).real
    if probability < CONFIG.noclick_floor:
        raise DegenerateTrajectoryError(f"record {tuple(record)!r} has probability {probability:.3e}")
    forward = mat_exp(protocol.h_f, -1j * complex(u))
    return trace_form(t.conj().T @ forward @ t, _initial_factor(protocol.h_i, beta, u)) / probability


def jarzynski_report(protocol: TrajectoryProtocol, beta: float, cap: int | None = None,
                     threads: int | None = None) -> JarzynskiReport:
    """
    Compares <exp(-beta W)> = G(-i beta) with Z_f / Z_i. The two agree whenever every measurement
    channel in the protocol is unital.
    """
    g = generating_function(protocol, beta, -1j * beta, cap, threads)
    log_ratio = (thermal_state(protocol.h_f, beta).log_partition_function
                 - thermal_state(protocol.h_i, beta).log_partition_function)
    ratio = float(np.exp(log_ratio))
    report = JarzynskiReport(g=g, free_energy_ratio=ratio, unital=protocol.is_unital, deviation=abs(g - ratio))
    if report.unital and report.deviation > 1e-8:
        logger.warning(f"Jarzynski equality violated for a unital protocol: deviation {report.deviation:.3e}")
    return report


def max_abs(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))
