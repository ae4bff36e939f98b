"""Solver configuration, initial-condition presets and the key=value file format."""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .fields import Grid, VectorField, sample

__all__ = [
    "SolverConfig",
    "Preset",
    "ConfigParseError",
    "parse_preset",
    "parse_config",
    "load_config",
    "format_config",
    "initial_field",
    "preset_potential",
]

PRESETS = ("zero", "constant", "sine", "potential")
_PRESET_PARAMS = {"zero": {}, "constant": {"value": 1.0}, "sine": {"amplitude": 1.0},
                  "potential": {"amplitude": 1.0}}


class ConfigParseError(ConfigurationError):
    """Config text rejected; ``line`` and ``field`` locate the problem when known."""

    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.field = field


@dataclass(frozen=True)
class Preset:
    """Named initial condition with numeric parameters, e.g. ``sine(amplitude=0.5)``."""

    name: str
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.name not in PRESETS:
            raise ConfigurationError(f"unknown preset {self.name!r}; expected one of {PRESETS}")
        allowed = _PRESET_PARAMS[self.name]
        for key, _ in self.params:
            if key not in allowed:
                raise ConfigurationError(f"preset {self.name!r} has no parameter {key!r}")

    def get(self, key: str) -> float:
        return dict(self.params).get(key, _PRESET_PARAMS[self.name][key])

    def __str__(self):
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={v!r}" for k, v in self.params)
        return f"{self.name}({inner})"


_PRESET_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def parse_preset(text: str) -> Preset:
    m = _PRESET_RE.match(text)
    if not m:
        raise ConfigurationError(f"cannot parse preset {text!r}")
    name, inner = m.group(1), m.group(2)
    params = []
    if inner and inner.strip():
        for item in inner.split(","):
            if "=" not in item:
                raise ConfigurationError(f"preset parameter {item.strip()!r} is not key=value")
            k, v = (s.strip() for s in item.split("=", 1))
            try:
                params.append((k, float(v)))
            except ValueError:
                raise ConfigurationError(f"preset parameter {k!r} is not a number: {v!r}") from None
    return Preset(name, tuple(params))


@dataclass(frozen=True)
class SolverConfig:
    """Everything ``run_global`` and the CLI need for one run."""

    n: int
    points_per_axis: int
    nu: float
    steps: int
    backend: str = "spectral"
    substeps_per_step: int = 64
    delta_tol: float = 1e-10
    max_substeps: int = 40
    contraction_bound: float = 0.5
    max_retries: int = 4
    c_star_n_override: float | None = None
    drift_source: str = "first_substep"
    initial_condition: Preset = field(default_factory=lambda: Preset("sine"))
    output_dir: str = "output"
    snapshot_stride: int = 8
    truncation_order: int = 1
    quadrature_nodes_time: int = 8

    def __post_init__(self):
        if isinstance(self.initial_condition, str):
            object.__setattr__(self, "initial_condition", parse_preset(self.initial_condition))
        checks = [
            ("n", self.n in (1, 2, 3), "must be 1, 2 or 3"),
            ("points_per_axis", self.points_per_axis >= 8
             and not self.points_per_axis & (self.points_per_axis - 1), "must be a power of two >= 8"),
            ("nu", self.nu > 0, "must be > 0"),
            ("steps", self.steps >= 0, "must be >= 0"),
            ("backend", self.backend in ("spectral", "parametrix"), "must be spectral or parametrix"),
            ("substeps_per_step", self.substeps_per_step >= 1, "must be >= 1"),
            ("delta_tol", self.delta_tol > 0, "must be > 0"),
            ("max_substeps", self.max_substeps >= 1, "must be >= 1"),
            ("contraction_bound", 0 < self.contraction_bound < 1, "must lie in (0, 1)"),
            ("max_retries", self.max_retries >= 0, "must be >= 0"),
            ("c_star_n_override", self.c_star_n_override is None or self.c_star_n_override >= 1,
             "must be >= 1"),
            ("drift_source", self.drift_source in ("first_substep", "converged"),
             "must be first_substep or converged"),
            ("snapshot_stride", self.snapshot_stride >= 1, "must be >= 1"),
            ("truncation_order", self.truncation_order >= 0, "must be >= 0"),
            ("quadrature_nodes_time", self.quadrature_nodes_time >= 2, "must be >= 2"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ConfigParseError(f"{msg}, got {getattr(self, name)!r}", field=name)

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)


_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(SolverConfig)}
_REQUIRED = [name for name, f in _CONFIG_FIELDS.items()
             if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING]
_INT_FIELDS = {"n", "points_per_axis", "steps", "substeps_per_step", "max_substeps", "max_retries",
               "snapshot_stride", "truncation_order", "quadrature_nodes_time"}
_FLOAT_FIELDS = {"nu", "delta_tol", "contraction_bound", "c_star_n_override"}


def _convert(name, raw, line):
    if name in _INT_FIELDS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigParseError(f"expected an integer, got {raw!r}", line, name) from None
    if name in _FLOAT_FIELDS:
        if name == "c_star_n_override" and raw.lower() in ("", "none", "auto"):
            return None
        try:
            value = float(raw)
        except ValueError:
            raise ConfigParseError(f"expected a number, got {raw!r}", line, name) from None
        if not np.isfinite(value):
            raise ConfigParseError(f"expected a finite number, got {raw!r}", line, name)
        return value
    if name == "initial_condition":
        try:
            return parse_preset(raw)
        except ConfigurationError as exc:
            raise ConfigParseError(str(exc), line, name) from None
    return raw


def parse_config(text: str) -> SolverConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict = {}
    lines: dict = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected key=value, got {line!r}", lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_FIELDS:
            raise ConfigParseError("unknown key", lineno, key)
        if key in values:
            raise ConfigParseError(f"duplicate key (first set on line {lines[key]})", lineno, key)
        values[key] = _convert(key, raw, lineno)
        lines[key] = lineno
    for name in _REQUIRED:
        if name not in values:
            raise ConfigParseError("required key is missing", field=name)
    try:
        return SolverConfig(**values)
    except ConfigParseError as exc:
        raise ConfigParseError(str(exc).split(": ", 1)[-1], lines.get(exc.field), exc.field) from None


def load_config(path) -> SolverConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config: {exc}") from None
    return parse_config(text)


def format_config(config: SolverConfig) -> str:
    """Canonical key=value text; ``parse_config(format_config(c)) == c``."""
    out = []
    for name in _CONFIG_FIELDS:
        value = getattr(config, name)
        if value is None:
            value = "none"
        elif isinstance(value, float):
            value = repr(value)
        out.append(f"{name}={value}")
    return "\n".join(out) + "\n"


# --- presets ------------------------------------------------------------------

TWO_PI = 2.0 * np.pi


def preset_potential(preset: Preset | str, n: int):
    """Scalar potential ``phi0`` of a preset, as a function of ``n`` coordinates.

    ``zero`` and ``constant`` give constant potentials (zero velocity);
    ``sine`` gives ``a sum_j cos(2 pi x_j)/(2 pi)`` and ``potential`` gives
    ``a prod_j cos(2 pi x_j)/(2 pi)``.
    """
    if isinstance(preset, str):
        preset = parse_preset(preset)
    if preset.name == "zero":
        return lambda *x: np.zeros_like(x[0])
    if preset.name == "constant":
        c = preset.get("value")
        return lambda *x: np.full_like(x[0], c)
    a = preset.get("amplitude")
    if preset.name == "sine":
        return lambda *x: a * sum(np.cos(TWO_PI * xj) for xj in x) / TWO_PI
    return lambda *x: a * np.prod([np.cos(TWO_PI * xj) for xj in x], axis=0) / TWO_PI


def _potential_gradient(preset: Preset, x):
    a = preset.get("amplitude")
    if preset.name == "sine":
        return [-a * np.sin(TWO_PI * xj) for xj in x]
    grads = []
    for j in range(len(x)):
        term = -a * np.sin(TWO_PI * x[j])
        for i, xi in enumerate(x):
            if i != j:
                term = term * np.cos(TWO_PI * xi)
        grads.append(term)
    return grads


def initial_field(preset: Preset | str, grid: Grid) -> VectorField:
    """Velocity ``h`` of a preset sampled on ``grid``.

    ``constant(value=c)`` is the uniform field with every component ``c``;
    ``sine`` and ``potential`` are ``-grad phi0`` of :func:`preset_potential`.
    """
    if isinstance(preset, str):
        preset = parse_preset(preset)
    if preset.name == "zero":
        return sample(grid, lambda *x: [np.zeros_like(xj) for xj in x])
    if preset.name == "constant":
        c = preset.get("value")
        return sample(grid, lambda *x: [np.full_like(xj, c) for xj in x])
    return sample(grid, lambda *x: [-g for g in _potential_gradient(preset, x)])
