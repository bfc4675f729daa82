"""
Simple configuration system that reads tolerances and runtime options from
environment variables, with the command line writing through to the same object
"""
import os
from dataclasses import dataclass, fields, Field

from workstats.errors import ConfigError


@dataclass
class Config:
    ###########################################################################
    # Numerical tolerances                                                    #
    ###########################################################################

    # Max-norm tolerance for Hermiticity, unitarity, completeness and normalization checks
    herm_tol: float = 1e-10
    # Work values closer than this (energy units) are merged into one atom
    merge_tol: float = 1e-9
    # Atoms whose merged probability is at or below this are dropped
    atom_floor: float = 1e-15
    # Post-selection probabilities below this are treated as a degenerate trajectory
    noclick_floor: float = 1e-300
    # A Kraus ladder step with dt * ||H_eff|| above this logs a warning
    dt_warn: float = 0.1
    # Largest accepted error estimate of a momentum quadrature
    quad_tol: float = 1e-8

    ###########################################################################
    # Optional options (with provided defaults)                               #
    ###########################################################################
    # Maximum number of measurement records enumerated by the TPM engine
    record_cap: int = 1_000_000
    # Records handed to one worker at a time. Fixed so results do not depend on the thread count
    record_chunk: int = 256
    # Gauss-Legendre nodes of the starting mesh for continuum momentum integrals
    n_k: int = 512
    # Upper limit on the panels an adaptive momentum quadrature may bisect into
    max_panels: int = 4096
    # Chain length used to turn the continuum efficacy density into a total
    efficacy_size: int = 100
    # Worker threads for sweeps and record enumeration, 0 picks the executor default
    threads: int = 0
    # Whether to print debug logging and per-point sweep progress
    verbose: bool = False
    # Directory where CSV files and reports are written when no --out is given
    out_dir: str = "out/"


def env_name(key: str) -> str:
    return "WORKSTATS_" + key.upper()


def set_option(c: Config, f: Field, val: str):
    """
    Assigns the string ``val`` to the field ``f`` of ``c``, converted to the field's type.
    """
    try:
        if f.type is bool:
            converted = val.lower() in ("1", "true", "yes")
        elif f.type is int:
            converted = int(val)
        elif f.type is float:
            converted = float(val)
        else:
            converted = val
    except ValueError as e:
        raise ConfigError(f.name, f"cannot convert {val!r} to {f.type.__name__}") from e
    setattr(c, f.name, converted)


def init_config(environ=None) -> Config:
    """
    Loads config values from environment variables ``WORKSTATS_<CONFIG_VALUE>=x``.
    """
    environ = os.environ if environ is None else environ
    c = Config()
    for f in fields(Config):
        env_val = environ.get(env_name(f.name))
        if env_val:
            set_option(c, f, env_val)
    validate_config(c)
    return c


def validate_config(c: Config):
    for name in ("herm_tol", "merge_tol", "quad_tol", "dt_warn"):
        if not getattr(c, name) > 0:
            raise ConfigError(name, "must be positive")
    if c.atom_floor < 0 or c.noclick_floor < 0:
        raise ConfigError("atom_floor" if c.atom_floor < 0 else "noclick_floor", "must not be negative")
    for name in ("record_cap", "record_chunk", "n_k", "max_panels", "efficacy_size"):
        if getattr(c, name) < 1:
            raise ConfigError(name, "must be at least 1")
    if c.threads < 0:
        raise ConfigError("threads", "must be 0 (auto) or a positive count")


CONFIG = init_config()
