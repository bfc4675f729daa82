"""
Quantum-jump measurement ladder and its post-selected no-click limit.

Monitoring a system with jump operators c_j in steps of dt gives the Kraus pair
M_0 = I - (R/2 + iH) dt, M_1 = sqrt(dt) c with R = sum_j c_j^dagger c_j. Keeping only
the record where no jump is ever detected and letting dt -> 0 yields exp(-i H_eff t)
with H_eff = H - iR/2.
"""
import logging
from dataclasses import dataclass

import numpy as np

from workstats.config import CONFIG
from workstats.errors import DegenerateTrajectoryError, InvalidInputError
from workstats.operators import OperatorMatrix, as_operator, is_hermitian, mat_exp, thermal_state, trace_form
from workstats.tpm import (KrausSet, MeasurementEvent, TrajectoryProtocol, WorkDistribution, kraus_set,
                           postselected_work_distribution)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class JumpModel:
    h: OperatorMatrix
    # Stack of jump operators with shape (n_jumps, dim, dim)
    jumps: np.ndarray

    def __post_init__(self):
        h = as_operator(self.h, "H")
        if not is_hermitian(h):
            raise InvalidInputError("the coherent generator H must be Hermitian")
        jumps = np.asarray(self.jumps, dtype=np.complex128)
        if jumps.ndim == 2:
            jumps = jumps[np.newaxis]
        if jumps.ndim != 3 or jumps.shape[1:] != h.shape:
            raise InvalidInputError(f"jump operators of shape {jumps.shape} do not match H {h.shape}")
        if not np.all(np.isfinite(jumps)):
            raise InvalidInputError("jump operators have non-finite entries")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "jumps", jumps)
        if np.min(np.linalg.eigvalsh(self.r)) < -1e-12:
            raise InvalidInputError("R = sum c^dagger c has a negative eigenvalue")

    @property
    def dim(self) -> int:
        return self.h.shape[0]

    @property
    def r(self) -> OperatorMatrix:
        return np.einsum("jki,jkl->il", self.jumps.conj(), self.jumps)

    @property
    def h_eff(self) -> OperatorMatrix:
        return self.h - 0.5j * self.r


def kraus_step(model: JumpModel, dt: float) -> KrausSet:
    """
    One measurement interval of the jump ladder: outcome 0 is "no click", outcome j > 0 a click of
    jump operator j - 1. Completeness only holds to O(dt^2).
    """
    if not dt > 0:
        raise InvalidInputError(f"dt must be positive, got {dt}")
    h_eff = model.h_eff
    norm = float(np.linalg.norm(h_eff, 2))
    if dt * norm > CONFIG.dt_warn:
        logger.warning(f"kraus_step: dt * ||H_eff|| = {dt * norm:.3g} is not small")

    no_click = np.eye(model.dim) - 1j * h_eff * dt
    clicks = [np.sqrt(dt) * c for c in model.jumps]
    # sum M^dag M - I = (R/2 - iH)(R/2 + iH) dt^2, bounded by ||H_eff||^2 dt^2
    tol = norm ** 2 * dt ** 2 * (1 + 1e-9) + CONFIG.herm_tol
    return kraus_set([no_click] + clicks, tol=tol)


def ladder_protocol(model: JumpModel, h_i, h_f, t: float, n_steps: int) -> TrajectoryProtocol:
    """
    The discretized ladder as a TPM protocol. The coherent evolution is carried by M_0, so no
    separate unitary segments sit between the measurements.
    """
    if n_steps < 1:
        raise InvalidInputError("the ladder needs at least one step")
    if not t > 0:
        raise InvalidInputError("the ladder needs a positive duration")
    dt = t / n_steps
    step = kraus_step(model, dt)
    events = [MeasurementEvent(kraus=step, time=(j + 1) * dt) for j in range(n_steps)]
    return TrajectoryProtocol(h_i=h_i, h_f=h_f, segments=tuple(events), t_i=0.0)


def noclick_propagator(model: JumpModel, t: float) -> OperatorMatrix:
    if t < 0:
        raise InvalidInputError(f"t must be non-negative, got {t}")
    return mat_exp(model.h_eff, -1j * t)


def noclick_probability(model: JumpModel, rho, t: float) -> float:
    """Probability Tr[exp(i H_eff^dag t) exp(-i H_eff t) rho] that no jump is recorded up to t."""
    k = noclick_propagator(model, t)
    return trace_form(k.conj().T @ k, as_operator(rho, "rho")).real


def noclick_generating_function(model: JumpModel, h_i, h_f, rho_i, t: float, u: complex) -> complex:
    """
    Generating function of the work conditioned on the no-click record:

    Tr[e^{i H_eff^dag t} e^{-i H_f u} e^{-i H_eff t} e^{i H_i u} rho_i] / Tr[e^{i H_eff^dag t} e^{-i H_eff t} rho_i]
    """
    h_i = as_operator(h_i, "H_i")
    h_f = as_operator(h_f, "H_f")
    rho_i = as_operator(rho_i, "rho_i")
    k = noclick_propagator(model, t)
    k_dag = k.conj().T
    probability = trace_form(k_dag @ k, rho_i).real
    if probability < CONFIG.noclick_floor:
        raise DegenerateTrajectoryError(f"no-click probability {probability:.3e} vanished at t = {t}")
    numerator = trace_form(k_dag @ mat_exp(h_f, -1j * complex(u)) @ k, mat_exp(h_i, 1j * complex(u)) @ rho_i)
    return numerator / probability


@dataclass(frozen=True)
class ModifiedJarzynskiReport:
    # <exp(-beta (W - dF))> from the post-selected work distribution
    lhs: float
    # the same average from the no-click generating function at u = -i beta
    lhs_generating: float
    efficacy: float
    # Description of the final-state reference used by <.>_f
    rho_f: str

    @property
    def deviation(self) -> float:
        return abs(self.lhs - self.efficacy)


def modified_jarzynski(model: JumpModel, h_i, h_f, beta: float, t: float) -> ModifiedJarzynskiReport:
    """
    Checks <exp(-beta (W - dF))> = gamma_t, where the efficacy is
    gamma_t = Tr[e^{-i H_eff t} e^{i H_eff^dag t} rho_f] / Tr[e^{i H_eff^dag t} e^{-i H_eff t} rho_i]
    and rho_f is the thermal state of H_f at the same beta.
    """
    h_i = as_operator(h_i, "H_i")
    h_f = as_operator(h_f, "H_f")
    initial = thermal_state(h_i, beta)
    final = thermal_state(h_f, beta)
    k = noclick_propagator(model, t)
    k_dag = k.conj().T

    denominator = trace_form(k_dag @ k, initial.rho).real
    if denominator < CONFIG.noclick_floor:
        raise DegenerateTrajectoryError(f"no-click probability {denominator:.3e} vanished at t = {t}")
    efficacy = trace_form(k @ k_dag, final.rho).real / denominator

    # exp(beta dF) = Z_i / Z_f
    free_energy_factor = np.exp(initial.log_partition_function - final.log_partition_function)
    distribution: WorkDistribution = postselected_work_distribution(h_i, h_f, beta, k)
    lhs = distribution.characteristic(-1j * beta).real * free_energy_factor
    lhs_generating = noclick_generating_function(model, h_i, h_f, initial.rho, t, -1j * beta).real * free_energy_factor

    report = ModifiedJarzynskiReport(lhs=float(lhs), lhs_generating=float(lhs_generating), efficacy=float(efficacy),
                                     rho_f=f"thermal state of H_f at beta = {beta:g}")
    if report.deviation > 1e-8 * max(1.0, abs(efficacy)):
        logger.warning(f"modified Jarzynski relation off by {report.deviation:.3e} at t = {t}")
    return report


def ramsey_generating_function(model: JumpModel, h_i, h_f, psi0, t: float, u: float) -> complex:
    """
    Simulates the ancilla interferometer that reads out the no-click generating function.

    The ancilla starts in |+>, the system in the eigenstate ``psi0`` of H_i. The system evolves
    without clicks, then exp(-i H_f u) acts controlled on the ancilla being |1>. The normalized
    ancilla coherence <sigma_x> + i <sigma_y> equals <psi0|K^dag e^{-i H_f u} K|psi0> / ||K psi0||^2,
    and the phase e^{i E_0 u} with E_0 the energy of ``psi0`` completes the generating function.
    """
    if complex(u).imag != 0:
        raise InvalidInputError("the interferometer only realizes real u")
    u = float(complex(u).real)
    h_i = as_operator(h_i, "H_i")
    h_f = as_operator(h_f, "H_f")
    psi0 = np.asarray(psi0, dtype=np.complex128).ravel()
    if psi0.shape != (model.dim,):
        raise InvalidInputError(f"psi0 has shape {psi0.shape}, expected ({model.dim},)")
    if abs(np.vdot(psi0, psi0).real - 1.0) > CONFIG.herm_tol:
        raise InvalidInputError("psi0 must be normalized")
    e0 = np.vdot(psi0, h_i @ psi0).real
    if np.linalg.norm(h_i @ psi0 - e0 * psi0) > 1e-8:
        raise InvalidInputError("psi0 is not an eigenstate of H_i, the post-processing phase is undefined")

    dim = model.dim
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    joint = np.kron(plus, psi0)
    joint = np.kron(np.eye(2), noclick_propagator(model, t)) @ joint
    controlled = np.zeros((2 * dim, 2 * dim), dtype=np.complex128)
    controlled[:dim, :dim] = np.eye(dim)
    controlled[dim:, dim:] = mat_exp(h_f, -1j * complex(u))
    joint = controlled @ joint

    # reduced (unnormalized) ancilla state, rows indexed by the ancilla
    amplitudes = joint.reshape(2, dim)
    ancilla = amplitudes @ amplitudes.conj().T
    norm = np.trace(ancilla).real
    if norm < CONFIG.noclick_floor:
        raise DegenerateTrajectoryError(f"no-click probability {norm:.3e} vanished at t = {t}")
    sigma_x = 2.0 * ancilla[1, 0].real / norm
    sigma_y = 2.0 * ancilla[1, 0].imag / norm
    return complex(sigma_x + 1j * sigma_y) * np.exp(1j * e0 * complex(u))
