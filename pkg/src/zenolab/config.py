"""Experiment configuration files.

Flat sectioned ``key = value`` text::

    # measured chain, L = 30
    [chain]
    L = 30
    g = 5
    [measurement]
    r_E = 5
    tau_m = 1
    [schedule]
    N = 100
    t = 1

Numbers may be arithmetic expressions in ``pi`` (``tau_m = 2*pi/5``) and
complex literals (``1+2j``).  Lists are comma separated, matrix rows are
separated by ``;`` and apparatus blocks by ``|``.  Unknown sections or keys
are errors.
"""
from __future__ import annotations

import ast
import logging
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .xx import Boundary, ChainConfig, MeasurementConfig
from .zeno import QndModel, ZenoSchedule

log = logging.getLogger(__name__)

KINDS = ("xx-run", "xx-sweep", "generic-run", "critical", "oracle-check")
SWEEP_AXES = ("tau_m", "N", "r_E", "g")

SCHEMA = {
    "experiment": {"kind"},
    "chain": {"L", "g", "omega", "boundary"},
    "measurement": {"r_E", "tau_m"},
    "schedule": {"N", "t"},
    "sweep": {"axis", "values"},
    "model": {"h0", "a", "v", "blocks", "psi_system", "psi_apparatus"},
    "critical": {"k_max", "spectra"},
    "output": {"dir", "plot"},
}

# default point for oracle-check
ORACLE_DEFAULTS = {("chain", "L"): "6", ("chain", "g"): "5", ("measurement", "r_E"): "5",
                   ("measurement", "tau_m"): "1", ("schedule", "N"): "10", ("schedule", "t"): "1"}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)) \
            and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_node(node.operand))
    raise ValueError("not a number")


def parse_number(text: str):
    try:
        return _eval_node(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, TypeError):
        raise ValueError(f"cannot parse number {text.strip()!r}") from None


@dataclass
class RawConfig:
    """Parsed ``section -> key -> (value, line)`` table."""

    path: Path
    entries: dict = field(default_factory=dict)

    def has(self, section, key) -> bool:
        return key in self.entries.get(section, {})

    def line(self, section, key):
        return self.entries.get(section, {}).get(key, (None, None))[1]

    def raw(self, section, key, default=None):
        if not self.has(section, key):
            if default is None:
                raise ConfigError(f"missing required key '{key}' in section [{section}]")
            return default
        return self.entries[section][key][0]

    def real(self, section, key, default=None) -> float:
        text = self.raw(section, key, default)
        try:
            value = parse_number(text)
            if isinstance(value, complex):
                raise ValueError(f"{key} must be real")
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"{key} must be finite")
            return value
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}", self.line(section, key)) from None

    def integer(self, section, key, default=None) -> int:
        value = self.real(section, key, default)
        if value != int(value):
            raise ConfigError(f"[{section}] {key}: expected an integer, got {value}", self.line(section, key))
        return int(value)

    def numbers(self, section, key, default=None) -> list:
        text = self.raw(section, key, default)
        try:
            return [parse_number(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}", self.line(section, key)) from None

    def matrix(self, section, key) -> np.ndarray:
        text = self.raw(section, key)
        try:
            rows = [[parse_number(x) for x in row.split(",")] for row in text.split(";")]
            return np.array(rows, dtype=complex)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}", self.line(section, key)) from None

    def blocks(self, section, key) -> list:
        text = self.raw(section, key)
        try:
            out = []
            for block in text.split("|"):
                rows = [[parse_number(x) for x in row.split(",")] for row in block.split(";")]
                out.append(np.array(rows, dtype=complex))
            return out
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}", self.line(section, key)) from None

    def boolean(self, section, key, default="false") -> bool:
        text = self.raw(section, key, default).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"[{section}] {key}: expected a boolean, got {text!r}", self.line(section, key))


def read_raw(path) -> RawConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = RawConfig(path)
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            cfg.entries.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", lineno)
        if section is None:
            raise ConfigError("key outside of any section", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key '{key}' in section [{section}]", lineno)
        if key in cfg.entries[section]:
            raise ConfigError(f"duplicate key '{key}' in section [{section}]", lineno)
        cfg.entries[section][key] = (value, lineno)
    return cfg


@dataclass
class ExperimentConfig:
    kind: str
    chain: ChainConfig | None = None
    measurement: MeasurementConfig | None = None
    schedule: ZenoSchedule | None = None
    model: QndModel | None = None
    sweep_axis: str | None = None
    sweep_values: list = field(default_factory=list)
    k_max: int = 1
    spectra: list | None = None
    out_dir: Path = Path(".")
    plot: bool = False


def _build(section, raw, fn):
    """Call ``fn`` and turn a ValueError into a ConfigError at the section's first line."""
    try:
        return fn()
    except ValueError as exc:
        lines = [ln for _, ln in raw.entries.get(section, {}).values()]
        raise ConfigError(f"[{section}] {exc}", min(lines) if lines else None) from None


def _chain(raw):
    boundary = raw.raw("chain", "boundary", "periodic").strip().lower()
    if boundary not in ("periodic", "open"):
        raise ConfigError(f"[chain] boundary must be periodic or open, got {boundary!r}",
                          raw.line("chain", "boundary"))
    L = raw.integer("chain", "L")
    g = raw.real("chain", "g")
    omega = raw.real("chain", "omega", "0")
    return _build("chain", raw, lambda: ChainConfig(L, g, omega, Boundary(boundary)))


def _measurement(raw, need_r_e=True):
    r_e = raw.real("measurement", "r_E") if need_r_e else raw.real("measurement", "r_E", "0")
    tau_m = raw.real("measurement", "tau_m")
    if tau_m < 0:
        raise ConfigError("[measurement] tau_m must be nonnegative", raw.line("measurement", "tau_m"))
    return MeasurementConfig(r_e, tau_m)


def _schedule(raw, tau_m):
    n = raw.integer("schedule", "N")
    t = raw.real("schedule", "t")
    if n < 1:
        raise ConfigError(f"[schedule] N must be >= 1, got {n}", raw.line("schedule", "N"))
    if t <= 0:
        raise ConfigError(f"[schedule] t must be positive, got {t}", raw.line("schedule", "t"))
    return ZenoSchedule(n, t, tau_m)


def _model(raw):
    h0 = [complex(x).real for x in raw.numbers("model", "h0")]
    a = [complex(x).real for x in raw.numbers("model", "a")]
    v = raw.matrix("model", "v")
    blocks = raw.blocks("model", "blocks")
    psi_s = np.array(raw.numbers("model", "psi_system"), dtype=complex)
    psi_e = np.array(raw.numbers("model", "psi_apparatus", "1"), dtype=complex)
    return _build("model", raw, lambda: QndModel(np.array(h0), np.array(a), v, tuple(blocks), psi_s, psi_e))


def _with_defaults(raw: RawConfig, defaults: dict) -> RawConfig:
    for (section, key), value in defaults.items():
        raw.entries.setdefault(section, {}).setdefault(key, (value, None))
    return raw


def parse_config(path, kind: str | None = None) -> ExperimentConfig:
    """Read and validate a configuration file.

    ``kind`` (the CLI subcommand) overrides ``[experiment] kind``; if both
    are present they must agree.
    """
    raw = read_raw(path)
    declared = raw.raw("experiment", "kind", "").strip() or None
    if kind is None:
        kind = declared
    if kind is None:
        raise ConfigError("missing required key 'kind' in section [experiment]")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}", raw.line("experiment", "kind"))
    if declared is not None and declared != kind:
        raise ConfigError(f"config declares kind {declared!r} but {kind!r} was requested",
                          raw.line("experiment", "kind"))

    exp = ExperimentConfig(kind)
    exp.out_dir = Path(raw.raw("output", "dir", "."))
    exp.plot = raw.boolean("output", "plot")

    if kind == "oracle-check":
        _with_defaults(raw, ORACLE_DEFAULTS)

    if kind == "xx-sweep":
        axis = raw.raw("sweep", "axis").strip()
        if axis not in SWEEP_AXES:
            raise ConfigError(f"[sweep] axis must be one of {', '.join(SWEEP_AXES)}", raw.line("sweep", "axis"))
        values = raw.numbers("sweep", "values")
        if not values or any(isinstance(v, complex) or not math.isfinite(v) for v in values):
            raise ConfigError("[sweep] values must be a nonempty list of finite reals", raw.line("sweep", "values"))
        exp.sweep_axis, exp.sweep_values = axis, [float(v) for v in values]
        section = {"tau_m": "measurement", "r_E": "measurement", "N": "schedule", "g": "chain"}[axis]
        # the swept key may be omitted; validate the base point with the first value
        if not raw.has(section, axis):
            raw.entries.setdefault(section, {})[axis] = (repr(exp.sweep_values[0]), raw.line("sweep", "values"))
        for v in exp.sweep_values:
            if axis == "N" and (v != int(v) or v < 1):
                raise ConfigError(f"[sweep] N values must be positive integers, got {v}", raw.line("sweep", "values"))
            if axis == "tau_m" and v < 0:
                raise ConfigError(f"[sweep] tau_m values must be nonnegative, got {v}", raw.line("sweep", "values"))

    if kind in ("xx-run", "xx-sweep", "oracle-check"):
        exp.chain = _chain(raw)
        exp.measurement = _measurement(raw)
        exp.schedule = _schedule(raw, exp.measurement.tau_m)
    elif kind == "generic-run":
        exp.model = _model(raw)
        exp.measurement = _measurement(raw, need_r_e=False)
        exp.schedule = _schedule(raw, exp.measurement.tau_m)
    elif kind == "critical":
        exp.k_max = raw.integer("critical", "k_max", "1")
        if exp.k_max < 1:
            raise ConfigError("[critical] k_max must be >= 1", raw.line("critical", "k_max"))
        if raw.has("critical", "spectra"):
            text = raw.raw("critical", "spectra")
            try:
                exp.spectra = [[float(complex(parse_number(x)).real) for x in level.split(",") if x.strip()]
                               for level in text.split("|")]
            except ValueError as exc:
                raise ConfigError(f"[critical] spectra: {exc}", raw.line("critical", "spectra")) from None
        elif raw.has("model", "blocks"):
            exp.model = _model(raw)
        elif raw.has("measurement", "r_E"):
            exp.measurement = MeasurementConfig(raw.real("measurement", "r_E"), 0.0)
        else:
            raise ConfigError("critical needs [critical] spectra, [model] blocks or [measurement] r_E")

    _echo(exp)
    return exp


def _echo(exp: ExperimentConfig) -> None:
    log.info("experiment: %s", exp.kind)
    if exp.chain is not None:
        log.info("chain: L=%d g=%r omega=%r boundary=%s", exp.chain.L, exp.chain.g,
                 exp.chain.omega, exp.chain.boundary.value)
    if exp.measurement is not None:
        if exp.model is None:
            log.info("measurement: r_E=%r tau_m=%r", exp.measurement.r_E, exp.measurement.tau_m)
        else:
            log.info("measurement: tau_m=%r", exp.measurement.tau_m)
    if exp.schedule is not None:
        log.info("schedule: N=%d t=%r tau=%r", exp.schedule.N, exp.schedule.t, exp.schedule.tau)
    if exp.model is not None:
        log.info("model: d_S=%d d_E=%d h0=%s a=%s", exp.model.d_s, exp.model.d_e,
                 exp.model.h0_diag.tolist(), exp.model.a_diag.tolist())
    if exp.sweep_axis:
        log.info("sweep: %s over %s", exp.sweep_axis, exp.sweep_values)
    if exp.kind == "critical":
        log.info("critical: k_max=%d spectra=%s", exp.k_max, exp.spectra)
