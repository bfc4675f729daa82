"""
Dense complex linear algebra shared by the TPM engine, the no-click module and the oracles.

Energies are in units where J = 1 and hbar = 1. Every operator is a plain ``numpy`` array of
``complex128``; functions never modify their arguments.
"""
import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import scipy.linalg

from workstats.config import CONFIG
from workstats.errors import InvalidInputError

logger = logging.getLogger(__name__)

OperatorMatrix = npt.NDArray[np.complex128]

# Largest dimension handled by the dense routines
MAX_DENSE_DIM = 4096


def as_operator(a, name: str = "operator") -> OperatorMatrix:
    """Returns ``a`` as a finite, square complex matrix or raises InvalidInputError."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise InvalidInputError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return m


def is_hermitian(a, tol: float | None = None) -> bool:
    tol = CONFIG.herm_tol if tol is None else tol
    m = np.asarray(a)
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def is_unitary(a, tol: float | None = None) -> bool:
    tol = CONFIG.herm_tol if tol is None else tol
    m = np.asarray(a)
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])), initial=0.0) <= tol)


def adjoint(a) -> OperatorMatrix:
    return np.asarray(a).conj().T


def mat_exp(a, scale: complex = 1.0) -> OperatorMatrix:
    """
    Computes exp(scale * a) for a general (possibly non-normal) complex matrix.

    Uses scipy's scaling-and-squaring Padé approximant, so non-Hermitian generators such as
    H_eff = H - iR/2 are handled directly.
    """
    m = as_operator(a)
    if m.shape[0] > MAX_DENSE_DIM:
        raise InvalidInputError(f"dimension {m.shape[0]} exceeds the dense limit of {MAX_DENSE_DIM}")
    scale = complex(scale)
    if not np.isfinite(scale):
        raise InvalidInputError(f"non-finite exponent scale {scale}")
    result = scipy.linalg.expm(scale * m)
    if not np.all(np.isfinite(result)):
        raise InvalidInputError(f"exp(scale * A) overflowed for scale = {scale}")
    return result


@dataclass(frozen=True)
class ThermalState:
    rho: OperatorMatrix
    beta: float
    partition_function: float
    # log Z, finite even where Z itself over- or underflows
    log_partition_function: float


def thermal_state(h, beta: float) -> ThermalState:
    """
    Builds rho = exp(-beta H) / Z in the eigenbasis of H.

    :return: the Gibbs state together with Z and log Z
    """
    h = as_operator(h, "H")
    if not is_hermitian(h):
        raise InvalidInputError("thermal_state needs a Hermitian H")
    if not (beta >= 0 and np.isfinite(beta)):
        raise InvalidInputError(f"beta must be finite and non-negative, got {beta}")

    energies, vectors = np.linalg.eigh(h)
    exponents = -beta * energies
    shift = np.max(exponents)
    weights = np.exp(exponents - shift)
    total = np.sum(weights)
    log_z = float(shift + np.log(total))
    populations = weights / total
    rho = (vectors * populations) @ vectors.conj().T
    return ThermalState(rho=rho, beta=float(beta), partition_function=float(np.exp(log_z)),
                        log_partition_function=log_z)


def trace_form(*operators) -> complex:
    """
    Evaluates Tr[A B ... rho] where the last argument is the density operator.
    """
    if len(operators) == 0:
        raise InvalidInputError("trace_form needs at least one operator")
    mats = [np.asarray(op, dtype=np.complex128) for op in operators]
    dim = mats[-1].shape[0]
    for i, m in enumerate(mats):
        if m.shape != (dim, dim):
            raise InvalidInputError(f"operand {i} has shape {m.shape}, expected {(dim, dim)}")

    if len(mats) == 1:
        return complex(np.trace(mats[0]))
    if len(mats) == 2:
        # Tr[A rho] without forming the product
        return complex(np.einsum("ij,ji->", mats[0], mats[1]))
    return complex(np.trace(np.linalg.multi_dot(mats)))


def eigenspaces(h, tol: float | None = None) -> list[tuple[float, OperatorMatrix]]:
    """
    Groups the spectrum of a Hermitian matrix into multiplets.

    :return: list of (energy, orthonormal basis of the eigenspace as columns), in ascending energy
    """
    tol = CONFIG.merge_tol if tol is None else tol
    energies, vectors = np.linalg.eigh(as_operator(h))
    groups: list[tuple[float, OperatorMatrix]] = []
    start = 0
    for i in range(1, len(energies) + 1):
        if i == len(energies) or energies[i] - energies[start] > tol:
            groups.append((float(np.mean(energies[start:i])), vectors[:, start:i]))
            start = i
    return groups
