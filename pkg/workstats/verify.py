"""
Cross-checks of the closed-form layer against the brute-force oracles, and of the TPM engine
against the fluctuation theorems it has to satisfy.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from workstats.documents import VerifyRun
from workstats.efficacy import mode_efficacy, total_efficacy
from workstats.figures import sweep
from workstats.ising import (IsingParams, average_work_density, generating_function, mode_work_moments,
                             work_variance_density)
from workstats.noclick import (JumpModel, kraus_step, ladder_protocol, modified_jarzynski, noclick_generating_function,
                               noclick_propagator)
from workstats.operators import thermal_state
from workstats.oracle import FockQuantity, mode_fock_oracle, spin_chain_moments, spin_chain_oracle
from workstats.samples import (random_hermitian, random_jump_model, random_protocol, random_unital_protocol,
                               reset_protocol)
from workstats.tpm import generating_function as tpm_generating_function
from workstats.tpm import jarzynski_report, postselect_generating_function, work_distribution

logger = logging.getLogger(__name__)

FOCK_GRID = list(itertools.product((0.3, 0.5, 0.9), (0.5, 2.0, 5.0), (0.3, 1.0, 3.0)))
FOCK_MOMENTA = np.pi * np.array([1, 2, 3, 4, 5]) / 6
CHAIN_POINTS = [(0.5, 1.0, 0.7), (1.3, 2.0, 1.0), (0.2, 0.5, 2.0)]
CHAIN_U = (-0.7, -0.3, 0.2, 0.5, 1.1)
CHAIN_LENGTH = 6
# Random dim-4 jump models whose first-order product M_0^N is compared with exp(-i H_eff t)
LADDER_MODELS = 5
LADDER_STEPS = (256, 512, 1024, 2048)
LADDER_TIME = 0.5
MODIFIED_JARZYNSKI_DIMS = (2, 3, 4, 5, 6)
# Random protocols, dims 2..6 with up to 3 measurements, for the normalization check
NORMALIZATION_PROTOCOLS = 50


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    bound: float
    # "<=" for error checks, ">=" for checks that expect a violation
    relation: str = "<="
    detail: str = ""

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        return self.value <= self.bound if self.relation == "<=" else self.value >= self.bound


def _fock_errors() -> dict[FockQuantity, float]:
    errors = {FockQuantity.AVG_WORK: 0.0, FockQuantity.VARIANCE: 0.0, FockQuantity.EFFICACY: 0.0}
    for h, gamma, t in FOCK_GRID:
        params = IsingParams(h=h, gamma=gamma, t=t)
        w, var = mode_work_moments(FOCK_MOMENTA, params)
        efficacy = mode_efficacy(FOCK_MOMENTA, params)
        closed = {FockQuantity.AVG_WORK: w, FockQuantity.VARIANCE: var, FockQuantity.EFFICACY: efficacy}
        for quantity, values in closed.items():
            oracle = np.array([mode_fock_oracle(k, params, quantity=quantity) for k in FOCK_MOMENTA])
            errors[quantity] = max(errors[quantity], float(np.max(np.abs(oracle - values))))
    return errors


def check_fock_modes() -> list[CheckResult]:
    errors = _fock_errors()
    leakage = max(mode_fock_oracle(k, IsingParams(h=h, gamma=gamma, t=t), quantity=FockQuantity.ODD_LEAKAGE)
                  for h, gamma, t in FOCK_GRID for k in FOCK_MOMENTA)
    return [CheckResult(f"Fock oracle vs closed form: {quantity}", error, 1e-8) for quantity, error in errors.items()] + [
        CheckResult("Fock parity: the odd block never mixes in", leakage, 1e-12),
    ]


def check_unmonitored_efficacy() -> list[CheckResult]:
    error = 0.0
    for h in (0.5, 1.5):
        for t in (0.5, 2.0, 5.0):
            error = max(error, abs(total_efficacy(IsingParams(h=h, gamma=0.0, t=t)).gamma_t - 1.0))
    return [CheckResult("Efficacy of the unmonitored chain is 1", error, 1e-12)]


def check_spin_chain() -> list[CheckResult]:
    error = 0.0
    for h, gamma, t in CHAIN_POINTS:
        params = IsingParams(h=h, gamma=gamma, t=t, L=CHAIN_LENGTH)
        for u in CHAIN_U:
            error = max(error, abs(spin_chain_oracle(CHAIN_LENGTH, params, u=u) - generating_function(params, u)))
    return [CheckResult(f"Spin chain L={CHAIN_LENGTH} vs closed-form generating function", error, 1e-6)]


def check_spin_chain_moments() -> list[CheckResult]:
    mean_error = variance_error = 0.0
    for h, gamma, t in CHAIN_POINTS:
        params = IsingParams(h=h, gamma=gamma, t=t, L=CHAIN_LENGTH)
        mean, variance = spin_chain_moments(CHAIN_LENGTH, params)
        mean_error = max(mean_error, abs(mean - CHAIN_LENGTH * average_work_density(params)))
        variance_error = max(variance_error, abs(variance - CHAIN_LENGTH * work_variance_density(params)))
    return [
        CheckResult(f"Spin chain L={CHAIN_LENGTH} mean work from u-derivatives of G", mean_error, 1e-4),
        CheckResult(f"Spin chain L={CHAIN_LENGTH} work variance from u-derivatives of G", variance_error, 1e-4),
    ]


def check_normalization(seed: int, protocols: int = NORMALIZATION_PROTOCOLS) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    normalization = fourier = 0.0
    for _ in range(protocols):
        protocol = random_protocol(rng, int(rng.integers(2, 7)), int(rng.integers(0, 4)))
        beta = float(rng.uniform(0.0, 2.0))
        distribution = work_distribution(protocol, beta, threads=1)
        normalization = max(normalization, abs(tpm_generating_function(protocol, beta, 0.0, threads=1) - 1.0))
        for u in rng.uniform(-3.0, 3.0, size=20):
            fourier = max(fourier, abs(tpm_generating_function(protocol, beta, u, threads=1)
                                       - distribution.characteristic(u)))
    return [
        CheckResult(f"G(0) = 1, {protocols} protocols of dim 2..6", normalization, 1e-12),
        CheckResult("G(u) vs Fourier sum of the work atoms, 20 values of u each", fourier, 1e-9),
    ]


def check_jarzynski(protocols: int, seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    deviation = 0.0
    for _ in range(protocols):
        protocol = random_unital_protocol(rng)
        deviation = max(deviation, jarzynski_report(protocol, beta=float(rng.uniform(0.2, 2.0)), threads=1).deviation)
    reset = jarzynski_report(reset_protocol(), beta=1.0, threads=1)
    return [
        CheckResult(f"Jarzynski equality, {protocols} unital protocols", deviation, 1e-8),
        CheckResult("Jarzynski violation, qubit reset channel", reset.deviation, 0.01, relation=">="),
    ]


def ladder_errors(seed: int, steps: tuple[int, ...] = (256, 512), t: float = 0.5, beta: float = 0.8,
                  u: float = 0.6) -> list[float]:
    """
    Distance between the no-click generating function of the discretized ladder and its dt -> 0
    limit, for each number of steps.
    """
    rng = np.random.default_rng(seed)
    model = random_jump_model(rng, 3)
    h_i = random_hermitian(rng, 3)
    h_f = random_hermitian(rng, 3)
    exact = noclick_generating_function(model, h_i, h_f, thermal_state(h_i, beta).rho, t, u)
    errors = []
    for n in steps:
        protocol = ladder_protocol(model, h_i, h_f, t, n)
        errors.append(abs(postselect_generating_function(protocol, beta, (0,) * n, u) - exact))
    return errors


def propagator_ladder_errors(model: JumpModel, t: float = LADDER_TIME,
                             steps: tuple[int, ...] = LADDER_STEPS) -> list[float]:
    """Spectral-norm distance between M_0^N of the jump ladder and exp(-i H_eff t), per N in ``steps``."""
    exact = noclick_propagator(model, t)
    errors = []
    for n in steps:
        no_click = kraus_step(model, t / n).operators[0]
        errors.append(float(np.linalg.norm(np.linalg.matrix_power(no_click, n) - exact, 2)))
    return errors


def check_ladder(seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(LADDER_MODELS):
        errors = propagator_ladder_errors(random_jump_model(rng, 4))
        worst = max([worst] + [abs(coarse / fine - 2.0) for coarse, fine in itertools.pairwise(errors)])
    coarse, fine = ladder_errors(seed)
    ratio = coarse / fine
    return [
        CheckResult(f"No-click product M_0^N converges at first order, {LADDER_MODELS} models (max |ratio - 2|)",
                    worst, 0.2, detail=f"N = {', '.join(map(str, LADDER_STEPS))}"),
        CheckResult("No-click ladder generating function converges at first order (|ratio - 2|)", abs(ratio - 2.0),
                    0.3, detail=f"error ratio {ratio:.4f}"),
    ]


def check_modified_jarzynski(seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    deviation = consistency = 0.0
    for dim in MODIFIED_JARZYNSKI_DIMS:
        model = random_jump_model(rng, dim)
        report = modified_jarzynski(model, random_hermitian(rng, dim), random_hermitian(rng, dim), beta=0.7, t=0.8)
        scale = max(1.0, abs(report.efficacy))
        deviation = max(deviation, report.deviation / scale)
        consistency = max(consistency, abs(report.lhs - report.lhs_generating) / scale)
    dims = f"dim {MODIFIED_JARZYNSKI_DIMS[0]}..{MODIFIED_JARZYNSKI_DIMS[-1]}"
    return [
        CheckResult(f"Modified Jarzynski relation, {dims}", deviation, 1e-8),
        CheckResult(f"Post-selected distribution vs no-click generating function, {dims}", consistency, 1e-8),
    ]


def run_checks(run: VerifyRun | None = None, threads: int | None = None) -> list[CheckResult]:
    run = VerifyRun() if run is None else run
    checks: list[tuple[str, Callable[[], list[CheckResult]]]] = [
        ("normalization", lambda: check_normalization(run.seed)),
        ("Fock oracle", check_fock_modes),
        ("unmonitored efficacy", check_unmonitored_efficacy),
        ("spin chain", check_spin_chain),
        ("spin-chain moments", check_spin_chain_moments),
        ("Jarzynski", lambda: check_jarzynski(run.protocols, run.seed)),
        ("ladder", lambda: check_ladder(run.seed)),
        ("modified Jarzynski", lambda: check_modified_jarzynski(run.seed)),
    ]
    groups = sweep("Running checks", checks, lambda check: check[1](), threads, label=lambda check: check[0])
    results = [result for group in groups for result in group]
    for result in results:
        if not result.passed:
            logger.error(f"check failed: {result.name} ({result.value:.3e}, bound {result.relation} {result.bound:.1e})")
    return results
