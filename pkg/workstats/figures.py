"""
Parameter sweeps that tabulate the closed-form Ising results, one row per grid point.
"""
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

from workstats.config import CONFIG
from workstats.documents import Fig1Run, Fig2Run, Fig3Run, Fig4Run, TpmRun, build_protocol
from workstats.efficacy import total_efficacy
from workstats.errors import AccuracyError, DomainError
from workstats.ising import (IsingParams, average_work_density, critical_gamma, detect_kink,
                             noclick_log_probability_density, stationary_work_density, work_variance_density)
from workstats.progress import SweepProgress, announce
from workstats.report import Table
from workstats.tpm import jarzynski_report, work_distribution

logger = logging.getLogger(__name__)

P = TypeVar("P")
R = TypeVar("R")


def grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive uniform grid; ``stop`` is hit up to rounding of (stop - start) / step."""
    if stop < start:
        return np.empty(0)
    count = int(round((stop - start) / step))
    return start + step * np.arange(count + 1)


def sweep(step_name: str, points: Sequence[P], evaluate: Callable[[P], R], threads: int | None = None,
          label: Callable[[P], str] = str) -> list[R]:
    """
    Evaluates every point, in parallel when more than one thread is allowed. Results come back in
    the order of ``points``.
    """
    threads = CONFIG.threads if threads is None else threads
    progress = SweepProgress(step_name, len(points))
    results = []
    if threads == 1:
        for point in points:
            results.append(evaluate(point))
            progress.advance(label(point))
        return results
    with ThreadPoolExecutor(max_workers=threads or None) as executor:
        for point, value in zip(points, executor.map(evaluate, points)):
            results.append(value)
            progress.advance(label(point))
    return results


def fig1(run: Fig1Run, threads: int | None = None) -> Table:
    """Average work and variance density against the monitoring rate, one curve per field."""
    gammas = grid(0.0, run.gamma_max, run.gamma_step)
    points = [(h, float(gamma)) for h in run.h for gamma in gammas]

    def evaluate(point):
        h, gamma = point
        params = IsingParams(h=h, gamma=gamma, t=run.t, J=run.J, n_k=run.n_k)
        return (h, gamma, run.t, average_work_density(params, run.quad_tol),
                work_variance_density(params, run.quad_tol))

    rows = sweep("Sweeping monitoring rate", points, evaluate, threads)
    return Table(kind="fig1", params=dataclasses.asdict(run), header=["h", "gamma", "t", "avg_w", "var_w"],
                 rows=rows)


def fig2(run: Fig2Run, threads: int | None = None) -> tuple[Table, Table]:
    """
    Late-time average work against gamma, with the stationary limit alongside. The second table
    holds, per field, the kink of the stationary curve next to the critical rate 4 sqrt(J^2 - h^2).
    The finite-t curve carries a ringing of order 1/t from the boundary layer at k*, while its
    stationary limit is smooth in gamma away from the kink.
    """
    gammas = grid(run.gamma_min, run.gamma_max, run.gamma_step)
    points = [(h, float(gamma)) for h in run.h for gamma in gammas]

    def evaluate(point):
        h, gamma = point
        params = IsingParams(h=h, gamma=gamma, t=run.t, J=run.J, n_k=run.n_k)
        return h, gamma, average_work_density(params, run.quad_tol), stationary_work_density(params, run.quad_tol)

    rows = sweep("Sweeping late-time work", points, evaluate, threads)
    kinks = []
    for h in run.h:
        curve = [row for row in rows if row[0] == h]
        gamma_kink, _ = detect_kink([row[1] for row in curve], [row[3] for row in curve])
        gamma_c = critical_gamma(h, run.J)
        error = abs(gamma_kink - gamma_c) / gamma_c if gamma_c > 0 else float("nan")
        if gamma_c > 0 and error > 0.05:
            logger.warning(f"kink at gamma = {gamma_kink:g} is {error:.1%} away from gamma_c = {gamma_c:g} (h = {h:g})")
        kinks.append((h, gamma_kink, gamma_c, error))

    params = dataclasses.asdict(run)
    curves = Table(kind="fig2", params=params, header=["h", "gamma", "avg_w", "avg_w_stationary"], rows=rows)
    sidecar = Table(kind="fig2_kinks", params=params, header=["h", "gamma_kink", "gamma_c", "relative_error"],
                    rows=kinks)
    return curves, sidecar


def fig3(run: Fig3Run, threads: int | None = None) -> Table:
    """Average work and variance density against the transverse field, one curve per rate."""
    fields = grid(run.h_min, run.h_max, run.h_step)
    points = [(gamma, float(h)) for gamma in run.gamma for h in fields]

    def evaluate(point):
        gamma, h = point
        params = IsingParams(h=h, gamma=gamma, t=run.t, J=run.J, n_k=run.n_k)
        return (gamma, h, average_work_density(params, run.quad_tol),
                work_variance_density(params, run.quad_tol))

    rows = sweep("Sweeping transverse field", points, evaluate, threads)
    return Table(kind="fig3", params=dataclasses.asdict(run), header=["gamma", "h", "avg_w", "var_w"], rows=rows)


def fig4(run: Fig4Run, threads: int | None = None) -> Table:
    """
    Efficacy against time. gamma_t itself is written as nan once it underflows; its logarithm is
    always present, next to the log no-click probability density and the biorthogonal variant.
    A biorthogonal value that cannot be integrated is written as nan with a warning.
    """
    times = grid(0.0, run.t_max, run.t_step)
    points = [(gamma, float(t)) for gamma in run.gamma for t in times]

    def biorthogonal_log(params: IsingParams) -> float:
        try:
            return total_efficacy(params, size=run.size, biorthogonal=True, tol=run.quad_tol).log_gamma_t
        except (AccuracyError, DomainError) as e:
            logger.warning(f"biorthogonal efficacy at gamma = {params.gamma:g}, t = {params.t:g}: {e}")
            return float("nan")

    def evaluate(point):
        gamma, t = point
        params = IsingParams(h=run.h, gamma=gamma, t=t, J=run.J, n_k=run.n_k)
        efficacy = total_efficacy(params, size=run.size, tol=run.quad_tol)
        return (gamma, t, efficacy.log_gamma_t, efficacy.gamma_t,
                noclick_log_probability_density(params, run.quad_tol), biorthogonal_log(params))

    rows = sweep("Sweeping efficacy", points, evaluate, threads)
    return Table(kind="fig4", params=dataclasses.asdict(run),
                 header=["gamma", "t", "log_gamma_t", "gamma_t_or_nan", "log_noclick_density",
                         "log_gamma_t_biorthogonal"],
                 rows=rows)


def tpm(run: TpmRun, threads: int | None = None) -> Table:
    """Work atoms of a finite-dimensional protocol, with its Jarzynski check in the notes."""
    protocol = build_protocol(run)
    announce("Enumerating measurement records")
    distribution = work_distribution(protocol, run.beta, threads=threads)
    report = jarzynski_report(protocol, run.beta, threads=threads)
    notes = [
        f"jarzynski: <exp(-beta W)> = {report.g.real:.12g}{report.g.imag:+.3g}j",
        f"jarzynski: Z_f / Z_i = {report.free_energy_ratio:.12g}",
        f"jarzynski: unital = {str(report.unital).lower()}, deviation = {report.deviation:.3e}",
    ]
    params = {"beta": run.beta, "dim": protocol.dim, "measurements": len(protocol.events)}
    return Table(kind="tpm", params=params, header=["w", "p"], rows=distribution.atoms, notes=notes)
