"""
Brute-force validators for the analytic Ising layer.

The Fock oracle builds each (k, -k) pair from explicit creation and annihilation matrices and
never touches the Bogoliubov coefficients. The spin-chain oracle builds the monitored chain from
Pauli tensor products and hands it to the generic no-click machinery.
"""
import functools
import logging
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__

import numpy as np

from workstats.errors import InvalidInputError, ResourceLimitError
from workstats.ising import IsingParams
from workstats.noclick import JumpModel, noclick_generating_function
from workstats.operators import OperatorMatrix, mat_exp

logger = logging.getLogger(__name__)

# Largest chain the dense spin oracle accepts
MAX_CHAIN_LENGTH = 12

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_ANNIHILATE = np.array([[0, 1], [0, 0]], dtype=np.complex128)

# Basis positions of the even (|00>, |11>) and odd (|01>, |10>) parity states of the two-mode Fock space
EVEN_BLOCK = (0, 3)
ODD_BLOCK = (1, 2)


class FockQuantity(StrEnum):
    AVG_WORK = "avg_work_mode"
    VARIANCE = "variance_mode"
    EFFICACY = "efficacy_mode"
    AMPLITUDES = "amplitudes"
    # Largest propagator entry between the even and odd parity blocks
    ODD_LEAKAGE = "odd_leakage"


@functools.cache
def _pair_operators() -> tuple[OperatorMatrix, OperatorMatrix]:
    """Jordan-Wigner annihilators of the modes k and -k on the 4-dimensional Fock space."""
    c_k = np.kron(_ANNIHILATE, np.eye(2))
    c_minus_k = np.kron(PAULI_Z, _ANNIHILATE)
    return c_k, c_minus_k


def fock_mode_hamiltonian(k: float, params: IsingParams, gamma: float | None = None) -> OperatorMatrix:
    """
    a (n_k + n_-k - 1) + b* c_k^dag c_-k^dag + b c_-k c_k with a -> a + i gamma / 2 when monitored.
    """
    gamma = params.gamma if gamma is None else gamma
    c_k, c_minus_k = _pair_operators()
    a = 2.0 * (params.h - params.J * np.cos(k)) + 0.5j * gamma
    b = 2j * params.J * np.sin(k)
    number = c_k.conj().T @ c_k + c_minus_k.conj().T @ c_minus_k
    pairing = np.conj(b) * c_k.conj().T @ c_minus_k.conj().T + b * c_minus_k @ c_k
    return a * (number - np.eye(4)) + pairing


def mode_fock_oracle(k: float, params: IsingParams, t: float | None = None,
                     quantity: FockQuantity | str = FockQuantity.AVG_WORK, shift: complex = 0.0):
    """
    Evaluates one pair quantity by direct matrix algebra: the numeric ground state of the Hermitian
    block, evolved with the numeric exponential of the monitored block.

    :param shift: constant added to the monitored block, e.g. its ground-level offset
    """
    quantity = FockQuantity(quantity)
    t = params.t if t is None else t
    h_i = fock_mode_hamiltonian(k, params, gamma=0.0)
    h_eff = fock_mode_hamiltonian(k, params) + shift * np.eye(4)

    energies, vectors = np.linalg.eigh(h_i)
    if energies[1] - energies[0] < 1e-10:
        logger.warning(f"degenerate pair ground state at k = {k:.17g}")
    psi0 = vectors[:, 0]
    propagator = mat_exp(h_eff, -1j * t)
    if quantity is FockQuantity.ODD_LEAKAGE:
        even, odd = list(EVEN_BLOCK), list(ODD_BLOCK)
        return float(max(np.max(np.abs(propagator[np.ix_(odd, even)])),
                         np.max(np.abs(propagator[np.ix_(even, odd)]))))
    psi = propagator @ psi0
    norm = np.vdot(psi, psi).real

    if quantity is FockQuantity.EFFICACY:
        backward = propagator.conj().T @ psi0
        return np.vdot(backward, backward).real / norm
    if quantity is FockQuantity.AMPLITUDES:
        return psi[list(EVEN_BLOCK)] / np.sqrt(norm)

    energy = np.vdot(psi, h_i @ psi).real / norm
    if quantity is FockQuantity.AVG_WORK:
        return energy - energies[0]
    second = np.vdot(psi, h_i @ (h_i @ psi)).real / norm
    return second - energy ** 2


def _site_operator(op: OperatorMatrix, site: int, length: int) -> OperatorMatrix:
    result = np.eye(1, dtype=np.complex128)
    for j in range(length):
        result = np.kron(result, op if j == site else np.eye(2))
    return result


def _check_length(length: int):
    if length > MAX_CHAIN_LENGTH:
        raise ResourceLimitError(f"spin-chain oracle is limited to L <= {MAX_CHAIN_LENGTH}, got {length}")
    if length < 2 or length % 2:
        raise InvalidInputError(f"spin-chain oracle needs an even L >= 2, got {length}")


def spin_chain_hamiltonian(length: int, J: float, h: float) -> OperatorMatrix:
    """-J sum sz_j sz_{j+1} - h sum sx_j with periodic boundary conditions."""
    _check_length(length)
    zs = [_site_operator(PAULI_Z, j, length) for j in range(length)]
    xs = [_site_operator(PAULI_X, j, length) for j in range(length)]
    coupling = sum(zs[j] @ zs[(j + 1) % length] for j in range(length))
    return -J * coupling - h * sum(xs)


def spin_chain_jump_model(length: int, params: IsingParams) -> JumpModel:
    """The chain monitored by sqrt(gamma) (1 + sx_j) / 2 on every site."""
    hamiltonian = spin_chain_hamiltonian(length, params.J, params.h)
    identity = np.eye(2 ** length)
    jumps = np.stack([np.sqrt(params.gamma) * 0.5 * (identity + _site_operator(PAULI_X, j, length))
                      for j in range(length)])
    return JumpModel(h=hamiltonian, jumps=jumps)


def parity_operator(length: int) -> OperatorMatrix:
    result = np.eye(1, dtype=np.complex128)
    for _ in range(length):
        result = np.kron(result, PAULI_X)
    return result


def spin_chain_ground_state(length: int, J: float, h: float) -> np.ndarray:
    """
    Lowest state of the even-parity sector, which maps to antiperiodic fermions.
    """
    hamiltonian = spin_chain_hamiltonian(length, J, h)
    parity = parity_operator(length)
    # lift the odd sector above the whole spectrum
    shift = 2.0 * (np.linalg.norm(hamiltonian, 2) + 1.0)
    _, vectors = np.linalg.eigh(hamiltonian + 0.5 * shift * (np.eye(2 ** length) - parity))
    return vectors[:, 0]


def spin_chain_oracle(length: int, params: IsingParams, t: float | None = None, u: complex = 0.0) -> complex:
    """
    No-click generating function G(u) of the total work for the dense monitored chain, starting
    from its even-sector ground state with H_i = H_f.
    """
    _check_length(length)
    t = params.t if t is None else t
    model = spin_chain_jump_model(length, params)
    psi0 = spin_chain_ground_state(length, params.J, params.h)
    rho = np.outer(psi0, psi0.conj())
    return noclick_generating_function(model, model.h, model.h, rho, t, u)


def spin_chain_moments(length: int, params: IsingParams, t: float | None = None,
                       step: float = 1e-3) -> tuple[float, float]:
    """
    Mean and variance of the total work from central differences of log G(u) at u = 0,
    Richardson-extrapolated over the steps ``step`` and ``step / 2``. Much smaller steps lose
    the second difference to round-off in log G.
    """
    _check_length(length)
    t = params.t if t is None else t
    model = spin_chain_jump_model(length, params)
    psi0 = spin_chain_ground_state(length, params.J, params.h)
    rho = np.outer(psi0, psi0.conj())

    @functools.cache
    def log_g(u: float) -> complex:
        return complex(np.log(noclick_generating_function(model, model.h, model.h, rho, t, u)))

    def first(s: float) -> complex:
        return (log_g(s) - log_g(-s)) / (2 * s)

    def second(s: float) -> complex:
        return (log_g(s) - 2 * log_g(0.0) + log_g(-s)) / s ** 2

    d1 = (4 * first(step / 2) - first(step)) / 3
    d2 = (4 * second(step / 2) - second(step)) / 3
    return float((1j * d1).real), float((-d2).real)
