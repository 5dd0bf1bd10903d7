"""Binary matrix files and experiment configuration files.

Matrix file layout (all little-endian)::

    b"NSEM"  | u8 version = 1 | u64 rows | u64 cols | rows*cols f64, row-major

Configuration files are flat ``section.key = value`` lines (a TOML subset),
for example::

    world.d_k = 64
    world.seed = 33
    solver.tau_align = 1e-2
    run.methods = ["evoedit", "alphaedit"]

Unknown keys are rejected.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, MatrixFormatError
from .sequence import Method, SolverConfig
from .synth import WorldSpec

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

MAGIC = b"NSEM"
VERSION = 1
_HEADER = struct.Struct("<4sBQQ")


def write_matrix(path, a) -> None:
    a = np.ascontiguousarray(np.asarray(a, dtype="<f8"))
    if a.ndim != 2:
        raise MatrixFormatError(f"only 2-D matrices can be written, got shape {a.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, a.shape[0], a.shape[1]))
        fh.write(a.tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise MatrixFormatError(f"{path}: file too short for header")
    magic, version, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MatrixFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise MatrixFormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 8 * rows * cols
    if len(data) != expected:
        raise MatrixFormatError(
            f"{path}: {rows}x{cols} matrix needs {expected} bytes, file has {len(data)}"
        )
    a = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(rows, cols)
    if not np.all(np.isfinite(a)):
        raise MatrixFormatError(f"{path}: matrix contains NaN or Inf")
    return a.astype(np.float64)


VERIFY_SUITES = ("thm1", "thm2", "equivalence", "interference", "preservation")
REPORT_FORMATS = ("csv", "json")


@dataclass(frozen=True)
class ExperimentConfig:
    world: WorldSpec = field(default_factory=WorldSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    methods: tuple = ("evoedit", "alphaedit")
    output_dir: str = "results"
    report_formats: tuple = REPORT_FORMATS
    verify_suites: tuple = ()

    def __post_init__(self):
        if not self.methods and not self.verify_suites:
            raise ConfigError("select at least one method or one verify suite")
        for m in self.methods:
            try:
                Method(m)
            except ValueError:
                raise ConfigError(f"unknown method {m!r}") from None
        for fmt in self.report_formats:
            if fmt not in REPORT_FORMATS:
                raise ConfigError(f"unknown report format {fmt!r}")
        for suite in self.verify_suites:
            if suite not in VERIFY_SUITES:
                raise ConfigError(f"unknown verify suite {suite!r}")


_SECTIONS = {"world": WorldSpec, "solver": SolverConfig}
_RUN_KEYS = {"methods", "output_dir", "report_formats", "verify_suites"}


def _flatten(table, prefix=""):
    for key, value in table.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from _flatten(value, name + ".")
        else:
            yield name, value


def _coerce(name, value, target_type):
    if target_type in ("int", int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return value
    if target_type in ("float", float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number, got {value!r}")
        return float(value)
    if target_type in ("bool", bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false, got {value!r}")
        return value
    raise ConfigError(f"{name}: unsupported type {target_type!r}")


def _field_types(cls):
    return {f.name: f.type for f in fields(cls)}


def config_from_mapping(flat: dict) -> ExperimentConfig:
    """Build a validated config from ``{"world.d_k": 64, ...}``."""
    sections = {name: {} for name in _SECTIONS}
    run = {}
    for name, value in flat.items():
        section, _, key = name.partition(".")
        if section in _SECTIONS and key in _field_types(_SECTIONS[section]):
            ftype = _field_types(_SECTIONS[section])[key]
            sections[section][key] = _coerce(name, value, ftype)
        elif section == "run" and key in _RUN_KEYS:
            if key == "output_dir":
                if not isinstance(value, str):
                    raise ConfigError("run.output_dir must be a string")
                run[key] = value
            else:
                if isinstance(value, str):
                    value = [v.strip() for v in value.split(",") if v.strip()]
                if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                    raise ConfigError(f"{name} must be a list of strings")
                run[key] = tuple(value)
        else:
            raise ConfigError(f"unknown config key {name!r}")
    try:
        return ExperimentConfig(
            world=WorldSpec(**sections["world"]),
            solver=SolverConfig(**sections["solver"]),
            **run,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(text: str) -> ExperimentConfig:
    try:
        table = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return config_from_mapping(dict(_flatten(table)))


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def resolve_key(key: str) -> str:
    """Expand a bare sweep key such as ``batch_size`` to ``world.batch_size``."""
    if "." in key:
        return key
    for section, cls in _SECTIONS.items():
        if key in _field_types(cls):
            return f"{section}.{key}"
    raise ConfigError(f"unknown sweep key {key!r}")


def with_override(config: ExperimentConfig, key: str, value) -> ExperimentConfig:
    """Return a copy of ``config`` with one dotted ``world.*``/``solver.*`` key replaced."""
    key = resolve_key(key)
    section, _, name = key.partition(".")
    if section not in _SECTIONS or name not in _field_types(_SECTIONS[section]):
        raise ConfigError(f"cannot sweep over {key!r}")
    value = _coerce(key, value, _field_types(_SECTIONS[section])[name])
    return replace(config, **{section: replace(getattr(config, section), **{name: value})})


def parse_sweep(spec: str):
    """``"batch_size=1,10,100"`` -> ``("world.batch_size", [1, 10, 100])``."""
    key, sep, raw = spec.partition("=")
    if not sep or not raw:
        raise ConfigError(f"sweep must look like key=v1,v2,..., got {spec!r}")
    key = resolve_key(key.strip())
    values = []
    for item in raw.split(","):
        try:
            values.append(tomllib.loads(f"v = {item.strip()}")["v"])
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"bad sweep value {item!r}") from exc
    return key, values
