"""
Mode-resolved efficacy gamma_t of the monitored Ising chain with H_i = H_f, starting from the
ground state.

Each pair contributes ||exp(i h_eff^dag t) psi_0||^2 / ||exp(-i h_eff t) psi_0||^2. Both
propagators are 2x2 Pauli-vector exponentials in the monitored eigenbasis, where
h_eff^dag = chi_bar (1 - sz) - xi_bar sy, and the norms are Gram-weighted.
"""
import logging
from dataclasses import dataclass

import numpy as np

from workstats.config import CONFIG
from workstats.errors import DomainError
from workstats.ising import IsingParams, ModeCoefficients, integrate_modes, mode_coefficients

logger = logging.getLogger(__name__)

# gamma_t is only materialized when its logarithm is above this
LOG_UNDERFLOW = -700.0


@dataclass(frozen=True, eq=False)
class ModeAmplitudes:
    k: np.ndarray
    omega: np.ndarray
    omega_bar: np.ndarray
    # Forward and backward amplitudes, all multiplied by exp(-log_scale)
    C0: np.ndarray
    C1: np.ndarray
    D0: np.ndarray
    D1: np.ndarray
    log_scale: np.ndarray
    mode_efficacy: np.ndarray

    def unscaled(self) -> tuple[np.ndarray, np.ndarray]:
        """(C0, C1) without the overflow scaling; only safe for moderate |Im Omega| t."""
        factor = np.exp(self.log_scale)
        return self.C0 * factor, self.C1 * factor


def _scaled_trig(omega: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    cos(omega t) and sin(omega t) / omega, both multiplied by exp(-|Im omega t|).

    :return: (cos, sinc, |Im omega t|)
    """
    z = omega * t
    y = np.abs(z.imag)
    forward = np.exp(1j * z - y)
    backward = np.exp(-1j * z - y)
    cos = 0.5 * (forward + backward)
    small = np.abs(z) < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        sinc = np.where(small, t * (1.0 - z ** 2 / 6.0) * np.exp(-y), (forward - backward) / (2j * omega))
    return cos, sinc, y


def _gram_norm(mc: ModeCoefficients, c0: np.ndarray, c1: np.ndarray) -> np.ndarray:
    g0 = mc.P * c0 - 1j * mc.Q * c1
    g1 = -1j * mc.Q * c0 + mc.P * c1
    return (np.conj(c0) * g0 + np.conj(c1) * g1).real


def _amplitudes(mc: ModeCoefficients, t: float) -> ModeAmplitudes:
    """
    Forward amplitudes (C0, C1) = exp(i h^dag t) (1, i alpha) for h^dag = chi_bar (1 - sz) - xi_bar sy,
    and the backward row (D0, D1) = (1, -i alpha*) exp(-i h~ t), which is their complex conjugate.
    The physical efficacy only needs the traceless part of h^dag and is computed on its own.
    """
    alpha = mc.alpha
    omega = np.sqrt(mc.chi ** 2 + mc.xi ** 2)
    omega_bar = np.sqrt(mc.chi_bar ** 2 + mc.xi_bar ** 2)
    t = float(t)

    cos_bar, sinc_bar, y = _scaled_trig(omega_bar, t)
    # |exp(i chi_bar t)| = exp(-Im(chi_bar) t) joins the overflow scaling
    scale = y - mc.chi_bar.imag * t
    phase_bar = np.exp(1j * mc.chi_bar.real * t)
    c0 = phase_bar * (cos_bar - 1j * (mc.chi_bar + alpha * mc.xi_bar) * sinc_bar)
    c1 = phase_bar * (1j * alpha * cos_bar + (mc.xi_bar - alpha * mc.chi_bar) * sinc_bar)

    cos, sinc, _ = _scaled_trig(omega, t)
    alpha_c = np.conj(alpha)
    phase = np.exp(-1j * mc.chi.real * t)
    d0 = phase * (cos + 1j * (mc.chi - alpha_c * mc.xi) * sinc)
    d1 = phase * (-1j * alpha_c * cos - (mc.xi + alpha_c * mc.chi) * sinc)

    return ModeAmplitudes(k=mc.k, omega=omega, omega_bar=omega_bar, C0=c0, C1=c1, D0=d0, D1=d1,
                          log_scale=scale, mode_efficacy=_physical_efficacy(mc, t))


def _physical_efficacy(mc: ModeCoefficients, t: float) -> np.ndarray:
    """
    Gram-weighted ||exp(i h_eff^dag t) psi_0||^2 / ||exp(-i h_eff t) psi_0||^2 with the traceless
    h_eff^dag = -chi_bar sz + xi_bar sy; a constant in either generator cancels from the ratio.
    """
    alpha = mc.alpha
    omega_bar = np.sqrt(mc.chi_bar ** 2 + mc.xi_bar ** 2)
    cos_bar, sinc_bar, scale = _scaled_trig(omega_bar, t)
    c0 = cos_bar - 1j * (mc.chi_bar - alpha * mc.xi_bar) * sinc_bar
    c1 = 1j * alpha * cos_bar - (mc.xi_bar + alpha * mc.chi_bar) * sinc_bar

    # no-click state (e^{i eps t}, i alpha e^{-i eps t}) under the same scaling, |Im eps t| = scale
    eps_t = mc.eps_eff * t
    f0 = np.exp(1j * eps_t - scale)
    f1 = 1j * alpha * np.exp(-1j * eps_t - scale)
    return _gram_norm(mc, c0, c1) / _gram_norm(mc, f0, f1)


def mode_amplitudes(k, params: IsingParams) -> ModeAmplitudes:
    return _amplitudes(mode_coefficients(k, params), params.t)


def _checked_log(values: np.ndarray, k: np.ndarray) -> np.ndarray:
    bad = ~(values > 0)
    if np.any(bad):
        index = int(np.argmax(np.ravel(bad)))
        raise DomainError(float(np.ravel(k)[index]), f"mode efficacy {np.ravel(values)[index]!r} is not positive")
    return np.log(values)


def mode_efficacy(k, params: IsingParams) -> np.ndarray:
    return _physical_efficacy(mode_coefficients(k, params), params.t)


def mode_log_efficacy(k, params: IsingParams) -> np.ndarray:
    mc = mode_coefficients(k, params)
    return _checked_log(_physical_efficacy(mc, params.t), mc.k)


def mode_log_efficacy_biorthogonal(k, params: IsingParams) -> np.ndarray:
    """
    log of exp(-4 Q^2 Gamma t / D) (|C0|^2 + |C1|^2) / (1 + |alpha|^2 exp(-4 Gamma t)), the efficacy
    normalized with the biorthogonal instead of the physical norm. The amplitudes keep the
    exp(i chi_bar t) factor of the full generator.
    """
    mc = mode_coefficients(k, params)
    amplitudes = _amplitudes(mc, params.t)
    t = params.t
    weight = np.abs(amplitudes.C0) ** 2 + np.abs(amplitudes.C1) ** 2
    log_numerator = _checked_log(weight, mc.k) + 2.0 * amplitudes.log_scale
    with np.errstate(divide="ignore"):
        log_alpha2 = np.log(np.abs(mc.alpha) ** 2)
    log_denominator = np.logaddexp(0.0, log_alpha2 - 4.0 * mc.decay * t)
    # exp(-4 Q^2 Gamma t / D) = exp(-2 Im(E0_shift) t)
    return -2.0 * mc.E0_shift.imag * t + log_numerator - log_denominator


def mode_efficacy_biorthogonal(k, params: IsingParams) -> np.ndarray:
    return np.exp(mode_log_efficacy_biorthogonal(k, params))


@dataclass(frozen=True)
class EfficacyTotal:
    log_gamma_t: float
    # nan when gamma_t would underflow
    gamma_t: float
    # Chain length the product over modes refers to
    size: int

    @property
    def underflow(self) -> bool:
        return self.log_gamma_t < LOG_UNDERFLOW


def total_efficacy(params: IsingParams, size: int | None = None, biorthogonal: bool = False,
                   tol: float | None = None) -> EfficacyTotal:
    """
    gamma_t as the product of mode efficacies over k > 0, summed in log space. In the continuum the
    sum is L times the dk / 2 pi integral, with L = ``size`` (CONFIG.efficacy_size by default).
    """
    if params.is_finite:
        size = params.L
    elif size is None:
        size = CONFIG.efficacy_size
    per_mode = mode_log_efficacy_biorthogonal if biorthogonal else mode_log_efficacy
    log_gamma = size * integrate_modes(params, lambda k: per_mode(k, params), "log efficacy", tol)
    gamma = float(np.exp(log_gamma)) if log_gamma >= LOG_UNDERFLOW else float("nan")
    return EfficacyTotal(log_gamma_t=float(log_gamma), gamma_t=gamma, size=int(size))
