"""
Closed-form no-click work statistics of the monitored transverse-field Ising chain.

The chain is H = -J sum_j sz_j sz_{j+1} - h sum_j sx_j, monitored by the jump operators
sqrt(gamma) (1 + sx_j) / 2. In the even fermion-parity sector each momentum pair (k, -k),
0 < k < pi, evolves independently in the basis {vacuum, pair} under the 2x2 block
[[-a, b], [b*, a]] with a = 2(h - J cos k), b = 2iJ sin k. Monitoring replaces a by
a_nc = a + i gamma / 2, up to an imaginary constant that drops out of every normalized quantity.

All functions accept an array of momenta and work on it element-wise. Outputs are per-site
densities w = W / L; the initial state is the ground state of the unmonitored chain and
H_f = H_i.
"""
import dataclasses
import functools
import itertools
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.ndimage import median_filter

from workstats.config import CONFIG
from workstats.errors import AccuracyError, InvalidInputError, SingularModeError

logger = logging.getLogger(__name__)

# Gauss-Legendre nodes per quadrature panel
_PANEL_NODES = 16
# Panel edges k* +- _REFINE_WIDTH / 2^j for j < _REFINE_LEVELS grade the mesh towards the gapless momentum
_REFINE_WIDTH = 0.05
_REFINE_LEVELS = 8
# Neighbourhood (in grid points) whose median second difference counts as smooth curvature
_KINK_WINDOW = 9


@dataclass(frozen=True)
class IsingParams:
    h: float
    gamma: float
    t: float
    J: float = 1.0
    # Even chain length for the antiperiodic momentum grid, None for the continuum
    L: int | None = None
    # Gauss-Legendre nodes of the starting continuum mesh, None uses CONFIG.n_k
    n_k: int | None = None

    def __post_init__(self):
        for name in ("h", "gamma", "t", "J"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidInputError(f"{name} must be finite")
        if not self.J > 0:
            raise InvalidInputError("J must be positive")
        if self.h < 0 or self.gamma < 0 or self.t < 0:
            raise InvalidInputError("h, gamma and t must be non-negative")
        if self.L is not None and (self.L < 2 or self.L % 2):
            raise InvalidInputError(f"L must be a positive even integer, got {self.L}")
        if self.n_k is not None and self.n_k < 2 * _PANEL_NODES:
            raise InvalidInputError(f"n_k must be at least {2 * _PANEL_NODES}")

    @property
    def is_finite(self) -> bool:
        return self.L is not None

    @property
    def nodes(self) -> int:
        return self.n_k if self.n_k is not None else CONFIG.n_k

    def with_(self, **changes) -> "IsingParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class ModeCoefficients:
    k: np.ndarray
    a: np.ndarray
    b: np.ndarray
    eps_i: np.ndarray
    a_nc: np.ndarray
    # Complex dispersion lambda + i Gamma with Gamma <= 0
    eps_eff: np.ndarray
    u_i: np.ndarray
    v_i: np.ndarray
    u_nc: np.ndarray
    v_nc: np.ndarray
    det_nc: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    alpha: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    D: np.ndarray
    beta_c: np.ndarray
    delta_c: np.ndarray
    E0_gamma: np.ndarray
    E0_gamma_tilde: np.ndarray
    # Constant 2 eps_eff Q^2 / D; its imaginary part sets the biorthogonal normalization decay
    E0_shift: np.ndarray
    chi: np.ndarray
    xi: np.ndarray
    chi_bar: np.ndarray
    xi_bar: np.ndarray

    @property
    def decay(self) -> np.ndarray:
        """Gamma_k, the imaginary part of eps_eff."""
        return self.eps_eff.imag

    def rotation(self, monitored: bool = True) -> np.ndarray:
        """
        V = [[u, -iv], [-iv, u]] with a trailing (2, 2) axis; its columns are the right eigenvectors
        (eigenvalues -eps, +eps) of the mode block.
        """
        u, v = (self.u_nc, self.v_nc) if monitored else (self.u_i, self.v_i)
        return np.stack([np.stack([u, -1j * v], axis=-1), np.stack([-1j * v, u], axis=-1)], axis=-2)

    def final_hamiltonian(self) -> np.ndarray:
        """h_i written in the monitored eigenbasis, [[E0_gamma, i delta], [-i delta, beta]]."""
        return np.stack([np.stack([self.E0_gamma, 1j * self.delta_c], axis=-1),
                         np.stack([-1j * self.delta_c, self.beta_c.astype(complex)], axis=-1)], axis=-2)


@dataclass(frozen=True)
class ModeGrid:
    k: np.ndarray
    # Integration weights: sum(weights * f(k)) is the per-site density of a per-pair quantity f
    weights: np.ndarray


def _dispersion(a: np.ndarray, b_abs2: np.ndarray) -> np.ndarray:
    """sqrt(a^2 + |b|^2) on the branch with non-positive imaginary part."""
    eps = np.sqrt(np.asarray(a ** 2 + b_abs2, dtype=complex))
    return np.where(eps.imag > 0, -eps, eps)


def _shifted(a: np.ndarray, eps: np.ndarray, b_abs2: np.ndarray) -> np.ndarray:
    """a + eps, using (a + eps)(eps - a) = |b|^2 where a + eps cancels."""
    direct = a + eps
    other = eps - a
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.abs(direct) >= np.abs(other), direct, b_abs2 / other)


def _rotation_entries(k: np.ndarray, a, b, eps, b_abs2) -> tuple[np.ndarray, np.ndarray]:
    s = _shifted(a, eps, b_abs2)
    singular = np.abs(s) < 1e-14
    if np.any(singular):
        raise SingularModeError(float(np.ravel(k)[np.argmax(np.ravel(singular))]), "a + eps vanishes")
    u = 1.0 / np.sqrt(1.0 + b_abs2 / np.abs(s) ** 2)
    v = 1j * b * u / s
    return u, v


def mode_coefficients(k, params: IsingParams) -> ModeCoefficients:
    """
    The full per-momentum bundle: Hermitian and monitored Bogoliubov rotations, their overlaps
    X, Y, the Gram entries P, Q of the monitored rotation, and the coefficients of h_i and
    h_eff^dagger in the monitored eigenbasis.
    """
    k = np.asarray(k, dtype=float)
    if np.any((k <= 0) | (k >= np.pi)):
        raise InvalidInputError("momenta must lie strictly inside (0, pi)")
    J, h, gamma = params.J, params.h, params.gamma

    a = 2.0 * (h - J * np.cos(k))
    b = 2j * J * np.sin(k)
    b_abs2 = 4.0 * J ** 2 * np.sin(k) ** 2
    eps_i = 2.0 * np.sqrt((h - J * np.cos(k)) ** 2 + (J * np.sin(k)) ** 2)
    a_nc = a + 0.5j * gamma
    eps_eff = _dispersion(a_nc, b_abs2)
    if gamma == 0:
        eps_eff = eps_i.astype(complex)

    u_i, v_i = _rotation_entries(k, a, b, eps_i, b_abs2)
    u_i, v_i = u_i.real, v_i.real
    u_nc, v_nc = _rotation_entries(k, a_nc, b, eps_eff, b_abs2)

    det_nc = u_nc ** 2 + v_nc ** 2
    X = u_i * u_nc + v_i * v_nc
    Y = u_i * v_nc - v_i * u_nc
    P = (np.abs(u_nc) ** 2 + np.abs(v_nc) ** 2).real
    Q = np.conj(u_nc) * v_nc - u_nc * np.conj(v_nc)
    D = (P ** 2 + Q ** 2).real

    beta_c = eps_i * (X ** 2 - Y ** 2) / det_nc
    delta_c = 2.0 * eps_i * X * Y / det_nc
    E0_gamma = -eps_i + 2.0 * eps_i * Y ** 2 / det_nc
    chi = eps_eff * (P ** 2 - Q ** 2) / D
    xi = -2.0 * eps_eff * P * Q / D

    return ModeCoefficients(
        k=k, a=a, b=b, eps_i=eps_i, a_nc=a_nc, eps_eff=eps_eff,
        u_i=u_i, v_i=v_i, u_nc=u_nc, v_nc=v_nc, det_nc=det_nc,
        X=X, Y=Y, alpha=Y / X, P=P, Q=Q, D=D,
        beta_c=beta_c, delta_c=delta_c, E0_gamma=E0_gamma, E0_gamma_tilde=np.conj(E0_gamma),
        E0_shift=2.0 * eps_eff * Q ** 2 / D,
        chi=chi, xi=xi, chi_bar=np.conj(chi), xi_bar=-np.conj(xi),
    )


def _quadratic(left: tuple, gram: tuple, right: tuple) -> np.ndarray:
    """left^dagger G right for G = [[P, -iQ], [-iQ, P]], element-wise over modes."""
    p, q = gram
    g0 = p * right[0] - 1j * q * right[1]
    g1 = -1j * q * right[0] + p * right[1]
    return np.conj(left[0]) * g0 + np.conj(left[1]) * g1


def _apply_final(mc: ModeCoefficients, c: tuple) -> tuple:
    return (mc.E0_gamma * c[0] + 1j * mc.delta_c * c[1],
            -1j * mc.delta_c * c[0] + mc.beta_c * c[1])


def _evolved_amplitudes(mc: ModeCoefficients, t: float) -> tuple:
    """
    Coefficients of the no-click state in the monitored eigenbasis, scaled by the growing vacuum
    factor so that the pair entry carries |exp(-2i eps_eff t)| <= 1.
    """
    phase = np.exp(-2j * mc.eps_eff * t)
    return mc.X, 1j * mc.Y * phase


def mode_work_moments(k, params: IsingParams) -> tuple[np.ndarray, np.ndarray]:
    """
    Mean work w_k and work variance of the pair (k, -k) after no-click evolution for params.t.

    :return: (w_k, var_k), both measured from the pair's ground-state energy -eps_i
    """
    mc = mode_coefficients(k, params)
    gram = (mc.P, mc.Q)
    c = _evolved_amplitudes(mc, params.t)
    hc = _apply_final(mc, c)
    hhc = _apply_final(mc, hc)
    norm = _quadratic(c, gram, c).real
    first = _quadratic(c, gram, hc).real / norm
    second = _quadratic(c, gram, hhc).real / norm
    return first + mc.eps_i, second - first ** 2


def stationary_mode_work(k, params: IsingParams) -> np.ndarray:
    """t -> infinity limit of w_k, where only the vacuum of the monitored block survives."""
    mc = mode_coefficients(k, params)
    return mc.eps_i + (mc.E0_gamma - mc.Q * mc.delta_c / mc.P).real


def mode_log_norm(k, params: IsingParams) -> np.ndarray:
    """log ||exp(-i h_eff t) psi_0||^2 for the traceless monitored block of each pair."""
    mc = mode_coefficients(k, params)
    c = _evolved_amplitudes(mc, params.t)
    scaled = _quadratic(c, (mc.P, mc.Q), c).real
    return -2.0 * mc.decay * params.t + np.log(scaled) - 2.0 * np.log(np.abs(mc.det_nc))


def _breakpoints(params: IsingParams) -> np.ndarray:
    """
    Fixed panel edges on [0, pi]. Below the critical field the no-click dispersion turns real at
    k* = arccos(h / J), where the late-time integrand develops a boundary layer and, at the
    critical rate, a square-root branch point, so the edges accumulate geometrically at k*.
    """
    ratio = params.h / params.J
    if not 0 <= ratio < 1:
        return np.array([0.0, np.pi])
    k_star = float(np.arccos(ratio))
    width = min(_REFINE_WIDTH, k_star / 2, (np.pi - k_star) / 2)
    offsets = width * 0.5 ** np.arange(_REFINE_LEVELS)
    return np.unique(np.concatenate([[0.0, k_star, np.pi], k_star - offsets, k_star + offsets]))


def _initial_panels(params: IsingParams, n_k: int) -> np.ndarray:
    """(start, end) rows between consecutive breakpoints, about n_k nodes spread by length."""
    panels = []
    for start, end in itertools.pairwise(_breakpoints(params)):
        pieces = max(1, int(round((end - start) / np.pi * n_k / _PANEL_NODES)))
        cuts = np.linspace(start, end, pieces + 1)
        panels.extend(zip(cuts[:-1], cuts[1:]))
    return np.array(panels)


@functools.cache
def _legendre() -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(_PANEL_NODES)


def _panel_nodes(panels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and dk / 2 pi weights, one row per panel."""
    x, w = _legendre()
    half = 0.5 * (panels[:, 1:] - panels[:, :1])
    return panels[:, :1] + half * (x + 1.0), half * w / (2.0 * np.pi)


def _bisect(panels: np.ndarray) -> np.ndarray:
    """Left halves followed by right halves."""
    mid = 0.5 * (panels[:, 0] + panels[:, 1])
    return np.concatenate([np.stack([panels[:, 0], mid], axis=1), np.stack([mid, panels[:, 1]], axis=1)])


def _panel_estimates(panels: np.ndarray, per_mode: Callable[[np.ndarray], np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """
    Per-panel integrals on both halves and the distance to the single-panel rule.

    :return: (values, error estimates)
    """
    stacked = np.concatenate([panels, _bisect(panels)])
    k, w = _panel_nodes(stacked)
    sums = np.sum(w * np.reshape(np.asarray(per_mode(k.ravel()), dtype=float), k.shape), axis=1)
    whole, left, right = np.split(sums, 3)
    return left + right, np.abs(left + right - whole)


def _adaptive_quadrature(panels: np.ndarray, per_mode: Callable[[np.ndarray], np.ndarray], tol: float,
                         what: str) -> float:
    """
    Globally adaptive Gauss-Legendre integration. While the summed panel errors exceed ``tol``, the
    smallest-error panels that together stay within tol / 2 are frozen and every other panel is
    bisected. Runs out of panels (CONFIG.max_panels) or of floating-point resolution raise.
    """
    values, errors = _panel_estimates(panels, per_mode)
    while True:
        total = float(np.sum(errors))
        if not np.isfinite(total):
            raise AccuracyError(total, tol, f"{what}: non-finite integrand")
        if total <= tol:
            break
        order = np.argsort(errors, kind="stable")
        frozen = np.cumsum(errors[order]) <= 0.5 * tol
        keep, split = np.sort(order[frozen]), np.sort(order[~frozen])
        if len(panels) + len(split) > CONFIG.max_panels:
            raise AccuracyError(total, tol, f"{what} after {len(panels)} panels")
        children = _bisect(panels[split])
        if np.any(children[:, 1] <= children[:, 0]):
            raise AccuracyError(total, tol, f"{what}: panels cannot be split further")
        child_values, child_errors = _panel_estimates(children, per_mode)
        panels = np.concatenate([panels[keep], children])
        values = np.concatenate([values[keep], child_values])
        errors = np.concatenate([errors[keep], child_errors])
    logger.debug(f"{what}: {len(panels)} panels, error estimate {total:.2e}")
    return float(np.sum(values[np.argsort(panels[:, 0], kind="stable")]))


def mode_grid(params: IsingParams, n_k: int | None = None) -> ModeGrid:
    """
    Finite L: the antiperiodic momenta k = (2n - 1) pi / L, n = 1 .. L/2, each weighted 1/L.
    Continuum: Gauss-Legendre nodes of the starting panel mesh on (0, pi), weighted for dk / 2 pi.
    """
    if params.is_finite:
        n = np.arange(1, params.L // 2 + 1)
        k = (2 * n - 1) * np.pi / params.L
        return ModeGrid(k=k, weights=np.full(k.shape, 1.0 / params.L))
    k, w = _panel_nodes(_initial_panels(params, params.nodes if n_k is None else n_k))
    return ModeGrid(k=k.ravel(), weights=w.ravel())


def integrate_modes(params: IsingParams, per_mode: Callable[[np.ndarray], np.ndarray], what: str,
                    tol: float | None = None) -> float:
    """
    Density sum_k per_mode(k) / L. The continuum integral refines its panels until the error
    estimate is within ``tol`` (CONFIG.quad_tol by default).
    """
    if params.is_finite:
        grid = mode_grid(params)
        return float(np.sum(grid.weights * per_mode(grid.k)))
    tol = CONFIG.quad_tol if tol is None else tol
    label = f"{what} at h={params.h:g}, gamma={params.gamma:g}, t={params.t:g}"
    return _adaptive_quadrature(_initial_panels(params, params.nodes), per_mode, tol, label)


def ground_energy_density(params: IsingParams) -> float:
    """E_0^i / L = -(1/L) sum_k eps_i."""
    return integrate_modes(params, lambda k: -mode_coefficients(k, params).eps_i, "ground energy")


def average_work_density(params: IsingParams, tol: float | None = None) -> float:
    """<w> = <W> / L after no-click evolution for params.t."""
    return integrate_modes(params, lambda k: mode_work_moments(k, params)[0], "average work", tol)


def work_variance_density(params: IsingParams, tol: float | None = None) -> float:
    """
    Var(W) / L. Different pairs are independent, so the variance is the sum of pair variances.
    """
    return integrate_modes(params, lambda k: mode_work_moments(k, params)[1], "work variance", tol)


def stationary_work_density(params: IsingParams, tol: float | None = None) -> float:
    return integrate_modes(params, lambda k: stationary_mode_work(k, params), "stationary work", tol)


def noclick_log_probability_density(params: IsingParams, tol: float | None = None) -> float:
    """
    (1/L) log of the probability that no click is recorded up to params.t. The monitored chain
    differs from the sum of traceless pair blocks by the constant -i gamma L / 4.
    """
    modes = integrate_modes(params, lambda k: mode_log_norm(k, params), "no-click probability", tol)
    return -0.5 * params.gamma * params.t + modes


def generating_function(params: IsingParams, u: complex) -> complex:
    """
    Finite-L generating function prod_k [cos(eps u) - i sin(eps u) <h_k>/eps] exp(-i eps u) of the
    total work W; u may be complex.
    """
    if not params.is_finite:
        raise InvalidInputError("the generating function needs a finite chain length L")
    grid = mode_grid(params)
    mc = mode_coefficients(grid.k, params)
    w, _ = mode_work_moments(grid.k, params)
    energy = w - mc.eps_i
    u = complex(u)
    factors = (np.cos(mc.eps_i * u) - 1j * np.sin(mc.eps_i * u) * energy / mc.eps_i) * np.exp(-1j * mc.eps_i * u)
    return complex(np.prod(factors))


def critical_gamma(h: float, J: float = 1.0) -> float:
    """gamma_c = 4 sqrt(J^2 - h^2), the monitoring rate where the no-click gap opens."""
    return float(4.0 * np.sqrt(max(J ** 2 - h ** 2, 0.0)))


def detect_kink(gammas, values) -> tuple[float, int]:
    """
    Location of the kink of ``values`` on a uniform ``gammas`` grid: the central second difference
    that stands out most above the running median of its neighbours. Smooth curvature and
    small-amplitude ringing both show up in the median and cancel.

    :return: (gamma at the kink, its index)
    """
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        raise InvalidInputError("kink detection needs at least three points")
    second = np.abs(values[2:] - 2.0 * values[1:-1] + values[:-2])
    background = median_filter(second, size=min(_KINK_WINDOW, second.size), mode="nearest")
    index = int(np.argmax(second - background)) + 1
    return float(np.asarray(gammas)[index]), index
