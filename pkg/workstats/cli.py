"""
Command line interface: ``python -m workstats <kind> [--config FILE] [--out PATH]``
"""
import argparse
import logging
import sys
from pathlib import Path

from workstats import CONFIG, __version__, figures
from workstats.config import validate_config
from workstats.documents import RUN_KINDS, load_run
from workstats.errors import ConfigError, WorkStatsError
from workstats.report import Table, write_csv, write_verify_report
from workstats.verify import run_checks

logger = logging.getLogger("workstats")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="workstats",
                                     description="Work statistics of measured and monitored quantum systems")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="kind", required=True)
    helps = {
        "fig1": "average work and variance against the monitoring rate",
        "fig2": "late-time average work and its kink at the critical rate",
        "fig3": "average work and variance against the transverse field",
        "fig4": "efficacy and no-click probability against time",
        "tpm": "work distribution of a finite-dimensional protocol",
        "verify": "cross-check closed forms, oracles and fluctuation theorems",
    }
    for kind in RUN_KINDS:
        sub = subparsers.add_parser(kind, help=helps[kind])
        sub.add_argument("--config", type=Path, help="YAML or JSON run document; defaults apply when omitted")
        sub.add_argument("--out", type=Path,
                         help="output file; defaults to <out_dir>/<kind>.csv, verify writes Markdown to stdout")
        sub.add_argument("--threads", type=int, help="worker threads, 0 picks the executor default")
        sub.add_argument("--verbose", action="store_true", help="debug logging and per-point progress")
    return parser


def _output_path(kind: str, out: Path | None) -> Path:
    path = out if out is not None else Path(CONFIG.out_dir) / f"{kind}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_table(table: Table, path: Path):
    with open(path, "w") as f:
        write_csv(f, table)
    logger.info(f"Wrote {len(table.rows)} rows to {path}")


def run(kind: str, config: Path | None = None, out: Path | None = None, threads: int | None = None) -> int:
    """
    Executes one subcommand and writes its output.

    :return: the process exit code, 1 when verification fails
    """
    document = load_run(config, kind)
    if kind == "verify":
        results = run_checks(document, threads)
        if out is None:
            write_verify_report(sys.stdout, results)
        else:
            with open(_output_path(kind, out), "w") as f:
                write_verify_report(f, results)
        return 0 if all(result.passed for result in results) else 1

    if kind == "fig2":
        curves, kinks = figures.fig2(document, threads)
        path = _output_path(kind, out)
        _write_table(curves, path)
        _write_table(kinks, path.with_name(f"{path.stem}_kinks.csv"))
        return 0

    table = getattr(figures, kind)(document, threads)
    _write_table(table, _output_path(kind, out))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        CONFIG.verbose = True
    logging.basicConfig(level=logging.DEBUG if CONFIG.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads is not None:
            CONFIG.threads = args.threads
            validate_config(CONFIG)
        return run(args.kind, args.config, args.out, args.threads)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return 2
    except WorkStatsError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1
    except OSError as e:
        logger.error(f"Cannot write output: {e}")
        return 1
