"""
Run documents: the YAML or JSON files handed to ``--config``.

Every document is a mapping with a ``kind`` naming the subcommand; the remaining keys fill the
dataclass of that kind. Errors name the offending field path, e.g. ``segments[1].time``.
"""
import dataclasses
import logging
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from workstats.errors import ConfigError, WorkStatsError
from workstats.tpm import (MeasurementEvent, TrajectoryProtocol, UnitarySegment, kraus_set, projective_measurement,
                           reset_channel, unitary_segment)

logger = logging.getLogger(__name__)


@dataclass
class Fig1Run:
    # Transverse fields, one curve each
    h: list[float] = field(default_factory=lambda: [0.5, 1.0, 1.5])
    t: float = 1.0
    gamma_max: float = 40.0
    gamma_step: float = 0.1
    J: float = 1.0
    n_k: int = 512
    quad_tol: float = 1e-8


@dataclass
class Fig2Run:
    h: list[float] = field(default_factory=lambda: [0.3, 0.6, 0.9])
    t: float = 5000.0
    gamma_min: float = 0.5
    gamma_max: float = 6.0
    gamma_step: float = 0.02
    J: float = 1.0
    n_k: int = 2048
    quad_tol: float = 1e-8


@dataclass
class Fig3Run:
    gamma: list[float] = field(default_factory=lambda: [1.0, 2.0, 4.0])
    t: float = 1.0
    h_min: float = 0.0
    h_max: float = 4.0
    h_step: float = 0.05
    J: float = 1.0
    n_k: int = 512
    quad_tol: float = 1e-8


@dataclass
class Fig4Run:
    gamma: list[float] = field(default_factory=lambda: [0.0, 2.0, 5.0])
    h: float = 0.5
    t_max: float = 5.0
    t_step: float = 0.05
    J: float = 1.0
    # Chain length the continuum efficacy product refers to
    size: int = 100
    n_k: int = 512
    quad_tol: float = 1e-8


@dataclass
class TpmRun:
    h_i: list = field(default_factory=list)
    h_f: list = field(default_factory=list)
    beta: float = 1.0
    segments: list = field(default_factory=list)


@dataclass
class VerifyRun:
    # Random protocols drawn for the Jarzynski check
    protocols: int = 100
    seed: int = 7


RUN_KINDS: dict[str, type] = {
    "fig1": Fig1Run,
    "fig2": Fig2Run,
    "fig3": Fig3Run,
    "fig4": Fig4Run,
    "tpm": TpmRun,
    "verify": VerifyRun,
}


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _coerce(value, annotation, path: str):
    if annotation is float:
        if not _is_number(value):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if annotation is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true or false, got {value!r}")
        return value
    if typing.get_origin(annotation) is list:
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {value!r}")
        args = typing.get_args(annotation)
        if not args:
            return value
        return [_coerce(item, args[0], f"{path}[{i}]") for i, item in enumerate(value)]
    return value


def parse_run(document: Any, expected_kind: str | None = None):
    """
    Turns a parsed document into the run dataclass of its kind.
    """
    if not isinstance(document, dict):
        raise ConfigError("<document>", "expected a mapping at the top level")
    kind = document.get("kind")
    if kind not in RUN_KINDS:
        raise ConfigError("kind", f"expected one of {sorted(RUN_KINDS)}, got {kind!r}")
    if expected_kind is not None and kind != expected_kind:
        raise ConfigError("kind", f"document is for {kind!r} but the subcommand is {expected_kind!r}")

    cls = RUN_KINDS[kind]
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    values = {}
    for key, value in document.items():
        if key == "kind":
            continue
        if key not in names:
            raise ConfigError(str(key), f"unknown field for kind {kind!r}")
        values[key] = _coerce(value, hints[key], str(key))
    run = cls(**values)
    _validate(run)
    return run


def _validate(run):
    for name in ("t", "gamma_step", "h_step", "t_step", "gamma_max", "h_max", "t_max", "J"):
        if hasattr(run, name) and getattr(run, name) < 0:
            raise ConfigError(name, "must not be negative")
    for name in ("gamma_step", "h_step", "t_step", "J"):
        if hasattr(run, name) and not getattr(run, name) > 0:
            raise ConfigError(name, "must be positive")


def load_run(path: Path | None, kind: str):
    """
    Reads the run document at ``path``; without a path every field takes its default.
    """
    if path is None:
        return RUN_KINDS[kind]()
    try:
        with open(path) as f:
            document = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(str(path), f"cannot read config: {e.strerror}") from e
    except yaml.YAMLError as e:
        raise ConfigError(str(path), f"not valid YAML or JSON: {e}") from e
    logger.debug(f"Loaded {kind} run document from {path}")
    return parse_run(document, kind)


def parse_matrix(value, path: str) -> np.ndarray:
    """
    A matrix as a list of rows. Entries are numbers or strings Python's ``complex`` accepts,
    such as ``"0.5-1j"``.
    """
    if not isinstance(value, list) or not value or not all(isinstance(row, list) for row in value):
        raise ConfigError(path, "expected a non-empty list of rows")
    rows = []
    for i, row in enumerate(value):
        entries = []
        for j, entry in enumerate(row):
            try:
                if isinstance(entry, bool):
                    raise ValueError
                entries.append(complex(entry.replace(" ", "")) if isinstance(entry, str) else complex(entry))
            except (TypeError, ValueError):
                raise ConfigError(f"{path}[{i}][{j}]", f"not a number: {entry!r}") from None
        rows.append(entries)
    if any(len(row) != len(rows) for row in rows):
        raise ConfigError(path, "matrix must be square")
    return np.array(rows, dtype=np.complex128)


def _number(item: dict, key: str, path: str) -> float:
    if key not in item:
        raise ConfigError(f"{path}.{key}", "missing")
    if not _is_number(item[key]):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {item[key]!r}")
    return float(item[key])


def _segment(item, path: str, dim: int) -> UnitarySegment | MeasurementEvent:
    if not isinstance(item, dict):
        raise ConfigError(path, "expected a mapping")
    try:
        if "unitary" in item:
            return unitary_segment(unitary=parse_matrix(item["unitary"], f"{path}.unitary"))
        if "generator" in item:
            return unitary_segment(generator=parse_matrix(item["generator"], f"{path}.generator"),
                                   duration=_number(item, "duration", path))
        if "measurement" in item:
            time = _number(item, "time", path)
            measurement = item["measurement"]
            if measurement == "projective":
                basis = item.get("basis")
                kraus = projective_measurement(dim, None if basis is None else parse_matrix(basis, f"{path}.basis"))
            elif measurement == "reset":
                target = item.get("target", 0)
                if not isinstance(target, int) or isinstance(target, bool):
                    raise ConfigError(f"{path}.target", f"expected an integer, got {target!r}")
                kraus = reset_channel(dim, target)
            elif measurement == "kraus":
                operators = item.get("operators")
                if not isinstance(operators, list) or not operators:
                    raise ConfigError(f"{path}.operators", "expected a non-empty list of matrices")
                kraus = kraus_set([parse_matrix(op, f"{path}.operators[{r}]") for r, op in enumerate(operators)])
            else:
                raise ConfigError(f"{path}.measurement", f"expected projective, reset or kraus, got {measurement!r}")
            return MeasurementEvent(kraus=kraus, time=time)
    except ConfigError:
        raise
    except WorkStatsError as e:
        raise ConfigError(path, str(e)) from e
    raise ConfigError(path, "expected one of the keys unitary, generator or measurement")


def build_protocol(run: TpmRun) -> TrajectoryProtocol:
    h_i = parse_matrix(run.h_i, "h_i")
    h_f = parse_matrix(run.h_f, "h_f")
    segments = tuple(_segment(item, f"segments[{j}]", h_i.shape[0]) for j, item in enumerate(run.segments))
    try:
        return TrajectoryProtocol(h_i=h_i, h_f=h_f, segments=segments)
    except WorkStatsError as e:
        raise ConfigError("segments", str(e)) from e
