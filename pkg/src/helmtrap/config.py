"""Experiment configuration: one TOML file fully determines a run.

The parser is strict — unknown keys and sections are errors, so a typo like
``cornr_depth`` cannot silently fall back to a default — and the serializer is
canonical: fixed section order, fixed key order within each section, shortest
round-trip float formatting.  ``serialize -> parse -> serialize`` is therefore
byte-identical, which makes the config file a reliable cache key for rerunning
experiments.

This module deliberately avoids numpy so the command-line entry point can
parse arguments and configuration, pin the BLAS thread count through the
environment, and only then import the numeric stack.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

try:  # stdlib from 3.11 onward
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover
    import tomli as _toml

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config",
           "serialize_config", "resolve_ks", "KINDS"]

KINDS = ("geometry-check", "constants", "identities", "sweep", "quasimode",
         "coercivity", "scatter")

_K_MODES = ("list", "log", "quantized")

# kinds that sweep over wavenumbers and therefore need a [k] section
_SWEEPING = ("sweep", "quasimode", "coercivity", "scatter")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    geometry_kind: Optional[str] = None
    geometry_params: tuple = ()
    k_mode: Optional[str] = None
    k_values: tuple = ()
    k_min: Optional[float] = None
    k_max: Optional[float] = None
    k_count: Optional[int] = None
    m_min: Optional[int] = None
    m_max: Optional[int] = None
    label: str = ""
    out: str = "results"
    seed: int = 0
    threads: int = 1
    eta_c: float = 1.0
    ppw: float = 30.0
    corner_depth: int = 8
    node_cap: int = 12000
    direction_deg: float = 0.0
    scatter_grid: bool = False
    r0: float = 1.0
    r1: float = 1.4
    epsilon_scale: float = 0.5
    boundary_samples: int = 10000
    n_identity: int = 20
    n_friedrichs: int = 100
    n_flux: int = 20

    def __post_init__(self):
        self._check_types()
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind not in ("identities", "constants") \
                and self.geometry_kind is None:
            raise ConfigError(f"kind {self.kind!r} requires a [geometry] section")
        if self.kind in _SWEEPING and self.k_mode is None:
            raise ConfigError(f"kind {self.kind!r} requires a [k] section")
        if self.k_mode is not None:
            self._check_k()
        if self.ppw < 10.0:
            raise ConfigError(f"ppw must be >= 10, got {self.ppw}")
        if self.corner_depth < 0:
            raise ConfigError("corner_depth must be nonnegative")
        if self.node_cap < 1:
            raise ConfigError("node_cap must be positive")
        if self.eta_c == 0.0:
            raise ConfigError("eta_c must be nonzero (eta = eta_c * k)")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if not self.out:
            raise ConfigError("out must be a nonempty directory path")
        if self.epsilon_scale <= 0.0 or self.epsilon_scale >= 1.0:
            raise ConfigError("epsilon_scale must lie strictly in (0, 1)")
        if min(self.n_identity, self.n_friedrichs, self.n_flux) < 1:
            raise ConfigError("identity-suite counts must be >= 1")
        if self.boundary_samples < 1:
            raise ConfigError("boundary_samples must be >= 1")

    def _check_types(self):
        for name in ("seed", "threads", "corner_depth", "node_cap",
                     "k_count", "m_min", "m_max", "boundary_samples",
                     "n_identity", "n_friedrichs", "n_flux"):
            v = getattr(self, name)
            if v is not None and (isinstance(v, bool)
                                  or not isinstance(v, int)):
                raise ConfigError(f"{name} must be an integer, got {v!r}")
        for name in ("eta_c", "ppw", "k_min", "k_max", "direction_deg",
                     "r0", "r1", "epsilon_scale"):
            v = getattr(self, name)
            if v is not None and (isinstance(v, bool)
                                  or not isinstance(v, (int, float))):
                raise ConfigError(f"{name} must be a number, got {v!r}")
        for name in ("kind", "label", "out"):
            if not isinstance(getattr(self, name), str):
                raise ConfigError(f"{name} must be a string")
        if self.geometry_kind is not None \
                and not isinstance(self.geometry_kind, str):
            raise ConfigError("geometry kind must be a string")
        if not isinstance(self.scatter_grid, bool):
            raise ConfigError("scatter grid must be a boolean")
        if any(isinstance(k, bool) or not isinstance(k, (int, float))
               for k in self.k_values):
            raise ConfigError("wavenumber values must be numbers")

    def _check_k(self):
        if self.k_mode not in _K_MODES:
            raise ConfigError(f"k mode must be one of {_K_MODES}, "
                              f"got {self.k_mode!r}")
        if self.k_mode == "list":
            if not self.k_values:
                raise ConfigError("k mode 'list' needs a nonempty values array")
            if any(k < 1.0 for k in self.k_values):
                raise ConfigError("all wavenumbers must be >= 1")
            if len(set(self.k_values)) != len(self.k_values):
                raise ConfigError("wavenumber list contains duplicates")
            if any(f is not None for f in (self.k_min, self.k_max,
                                           self.k_count, self.m_min,
                                           self.m_max)):
                raise ConfigError("k mode 'list' only takes a values array")
        elif self.k_mode == "log":
            if self.k_values or self.m_min is not None or self.m_max is not None:
                raise ConfigError("k mode 'log' only takes min, max, count")
            if self.k_min is None or self.k_max is None or self.k_count is None:
                raise ConfigError("k mode 'log' needs min, max, count")
            if self.k_min < 1.0:
                raise ConfigError(f"k min must be >= 1, got {self.k_min}")
            if self.k_max <= self.k_min:
                raise ConfigError("k max must exceed k min")
            if self.k_count < 2:
                raise ConfigError("k count must be >= 2")
        else:  # quantized
            if self.k_values or any(f is not None for f in (self.k_min,
                                                            self.k_max,
                                                            self.k_count)):
                raise ConfigError("k mode 'quantized' only takes m_min, m_max")
            if self.m_min is None or self.m_max is None:
                raise ConfigError("k mode 'quantized' needs m_min and m_max")
            if self.m_min < 1:
                raise ConfigError("m_min must be >= 1")
            if self.m_max < self.m_min:
                raise ConfigError("m_max must be >= m_min")


def _freeze(value):
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    return value


def _section(data: dict, name: str, allowed: tuple) -> dict:
    body = data.pop(name, {})
    if not isinstance(body, dict):
        raise ConfigError(f"[{name}] must be a table")
    unknown = set(body) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    return body


def parse_config(text: str) -> ExperimentConfig:
    """Strict parse of the TOML experiment description."""
    try:
        data = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from exc

    fields = {}
    top_allowed = ("kind", "label", "out", "seed", "threads", "eta_c", "ppw",
                   "corner_depth", "node_cap")
    for key in top_allowed:
        if key in data:
            fields[key] = data.pop(key)
    if "kind" not in fields:
        raise ConfigError("missing required top-level key 'kind'")

    geo = data.pop("geometry", {})
    if not isinstance(geo, dict):
        raise ConfigError("[geometry] must be a table")
    if geo:
        if "kind" not in geo:
            raise ConfigError("[geometry] needs a 'kind' key")
        geo = dict(geo)
        fields["geometry_kind"] = geo.pop("kind")
        # remaining keys are constructor parameters, validated by the
        # geometry factory itself (each kind has its own signature)
        fields["geometry_params"] = tuple(
            sorted((k, _freeze(v)) for k, v in geo.items()))

    ksec = _section(data, "k", ("mode", "values", "min", "max", "count",
                                "m_min", "m_max"))
    if ksec:
        if "mode" not in ksec:
            raise ConfigError("[k] needs a 'mode' key")
        fields["k_mode"] = ksec.pop("mode")
        rename = {"values": "k_values", "min": "k_min", "max": "k_max",
                  "count": "k_count", "m_min": "m_min", "m_max": "m_max"}
        for key, val in ksec.items():
            fields[rename[key]] = _freeze(val)

    scatter = _section(data, "scatter", ("direction_deg", "grid"))
    if "direction_deg" in scatter:
        fields["direction_deg"] = scatter["direction_deg"]
    if "grid" in scatter:
        fields["scatter_grid"] = scatter["grid"]

    constants = _section(data, "constants",
                         ("r0", "r1", "epsilon_scale", "boundary_samples"))
    fields.update(constants)

    identities = _section(data, "identities",
                          ("n_identity", "n_friedrichs", "n_flux"))
    fields.update(identities)

    if data:
        raise ConfigError(f"unknown top-level keys/sections: {sorted(data)}")
    try:
        return ExperimentConfig(**fields)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


_STRING_ESCAPES = {'"': '\\"', "\\": "\\\\", "\b": "\\b", "\t": "\\t",
                   "\n": "\\n", "\f": "\\f", "\r": "\\r"}


def _toml_string(s: str) -> str:
    # basic-string escaping; astral characters stay literal (the file is
    # UTF-8), only controls and the two structural characters are escaped
    parts = ['"']
    for ch in s:
        if ch in _STRING_ESCAPES:
            parts.append(_STRING_ESCAPES[ch])
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            parts.append(f"\\u{ord(ch):04X}")
        else:
            parts.append(ch)
    parts.append('"')
    return "".join(parts)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigError("non-finite numbers cannot be serialized")
        return repr(value)
    if isinstance(value, str):
        return _toml_string(value)
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize value of type {type(value).__name__}")


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical TOML: fixed order, shortest-round-trip numbers."""
    lines = []
    for key in ("kind", "label", "out", "seed", "threads", "eta_c", "ppw",
                "corner_depth", "node_cap"):
        lines.append(f"{key} = {_toml_value(getattr(cfg, key))}")

    if cfg.geometry_kind is not None:
        lines += ["", "[geometry]", f"kind = {_toml_value(cfg.geometry_kind)}"]
        for key, value in sorted(cfg.geometry_params):
            lines.append(f"{key} = {_toml_value(value)}")

    if cfg.k_mode is not None:
        lines += ["", "[k]", f"mode = {_toml_value(cfg.k_mode)}"]
        if cfg.k_mode == "list":
            lines.append(f"values = {_toml_value(cfg.k_values)}")
        elif cfg.k_mode == "log":
            lines.append(f"min = {_toml_value(cfg.k_min)}")
            lines.append(f"max = {_toml_value(cfg.k_max)}")
            lines.append(f"count = {_toml_value(cfg.k_count)}")
        else:
            lines.append(f"m_min = {_toml_value(cfg.m_min)}")
            lines.append(f"m_max = {_toml_value(cfg.m_max)}")

    if cfg.kind == "scatter":
        lines += ["", "[scatter]",
                  f"direction_deg = {_toml_value(cfg.direction_deg)}",
                  f"grid = {_toml_value(cfg.scatter_grid)}"]
    if cfg.kind in ("constants", "geometry-check", "identities"):
        lines += ["", "[constants]",
                  f"r0 = {_toml_value(cfg.r0)}",
                  f"r1 = {_toml_value(cfg.r1)}",
                  f"epsilon_scale = {_toml_value(cfg.epsilon_scale)}",
                  f"boundary_samples = {_toml_value(cfg.boundary_samples)}"]
    if cfg.kind == "identities":
        lines += ["", "[identities]",
                  f"n_identity = {_toml_value(cfg.n_identity)}",
                  f"n_friedrichs = {_toml_value(cfg.n_friedrichs)}",
                  f"n_flux = {_toml_value(cfg.n_flux)}"]
    return "\n".join(lines) + "\n"


def resolve_ks(cfg: ExperimentConfig, boundary=None) -> list:
    """Concrete ascending wavenumber list for a sweeping experiment."""
    if cfg.k_mode == "list":
        return sorted(float(k) for k in cfg.k_values)
    if cfg.k_mode == "log":
        lo, hi = math.log(cfg.k_min), math.log(cfg.k_max)
        n = cfg.k_count
        ks = [math.exp(lo + i * (hi - lo) / (n - 1)) for i in range(n)]
        ks[0], ks[-1] = float(cfg.k_min), float(cfg.k_max)  # exact endpoints
        return ks
    if cfg.k_mode == "quantized":
        if boundary is None or boundary.facing is None:
            raise ConfigError(
                "k mode 'quantized' needs a geometry with facing walls")
        a = boundary.facing.gap
        return [m * math.pi / a for m in range(cfg.m_min, cfg.m_max + 1)]
    raise ConfigError(f"config kind {cfg.kind!r} does not sweep wavenumbers")
