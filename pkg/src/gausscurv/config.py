"""Experiment configuration: ``key = value`` lines under ``[section]`` headers.

Parsing goes through :mod:`configparser`; a separate pass over the raw text
records line numbers so errors can point at the offending line. Every known
key is materialized with its default, and :func:`emit_config` writes the
canonical form back out (parse/emit round-trips byte for byte).
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

from .curvature import BumpSum, CurvatureField, ExactFamily, GridSampled, RadialPower
from .errors import ConfigError, GaussCurvError

__all__ = ["ExperimentConfig", "parse_config", "load_config", "emit_config", "SCHEMA"]

KINDS = ("RadialPower", "ExactFamily", "BumpSum", "GridSampled")


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _bool(s):
    low = s.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError("expected true or false")


def _floats(s):
    return [_float(x) for x in s.split(",") if x.strip()]


def _ints(s):
    return [int(x) for x in s.split(",") if x.strip()]


def _kind(s):
    if s not in KINDS:
        raise ValueError(f"unknown kind {s!r}; expected one of {', '.join(KINDS)}")
    return s


def _positive(v):
    return v is None or v > 0


def _at_least_one(v):
    return all(x >= 1 for x in v)


def _increasing(v):
    return len(v) >= 2 and all(b > a for a, b in zip(v, v[1:]))


# (parser, default, check, check message); default None means unset
SCHEMA: dict[str, dict[str, tuple]] = {
    "curvature": {
        "kind": (_kind, None, None, ""),
        "ell": (_float, None, None, ""),
        "amplitude": (_float, 1.0, _positive, "must be positive"),
        "q": (_float, None, None, ""),
        "n_max": (int, 6, lambda v: v >= 2, "must be >= 2"),
        "scale": (_float, 1.0, _positive, "must be positive"),
        "family_alpha": (_float, None, _positive, "must be positive"),
        "path": (str, "", None, ""),
    },
    "run": {
        "alpha": (_float, None, _positive, "alpha must be positive"),
        "seed": (int, 0, None, ""),
        "check_radius": (_float, 50.0, _positive, "must be positive"),
    },
    "solver": {
        "damping": (_float, 1.0, lambda v: 0 < v <= 1, "must lie in (0, 1]"),
        "min_damping": (_float, 0.0625, lambda v: 0 < v <= 1, "must lie in (0, 1]"),
        "tol": (_float, 1e-6, _positive, "must be positive"),
        "max_iter": (int, 300, lambda v: v >= 1, "must be >= 1"),
        "r_max": (_float, 1024.0, lambda v: v > 1, "must exceed 1"),
        "order": (int, 16, lambda v: v >= 2, "must be >= 2"),
        "n_theta": (int, 64, lambda v: v >= 4 and v % 2 == 0, "must be even and >= 4"),
        "local_order": (int, 16, lambda v: v >= 2, "must be >= 2"),
        "local_theta": (int, 32, lambda v: v >= 4 and v % 2 == 0, "must be even and >= 4"),
        "bracket": (_bool, False, None, ""),
    },
    "alphap": {
        "p": (_floats, [1.0, 1.5, 2.0], lambda v: len(v) >= 1 and _at_least_one(v), "values must be >= 1"),
        "alpha_min": (_float, -2.0, None, ""),
        "alpha_max": (_float, 6.0, None, ""),
        "alpha_step": (_float, 0.25, _positive, "must be positive"),
        "r_max": (_float, 8192.0, lambda v: v >= 2.0**12, "must allow 6 tail annuli (>= 4096)"),
    },
    "asymptotics": {
        "fit_radii": (_floats, [10.0, 30.0, 100.0, 300.0, 1000.0], lambda v: len(v) >= 4, "need >= 4 radii"),
        "decay_radii": (_floats, [10.0, 20.0, 40.0, 80.0, 160.0, 320.0], _increasing, "must increase"),
        "beta": (_float, None, _positive, "must be positive"),
        "n_range": (_ints, [3, 4, 5, 6], lambda v: len(v) >= 2 and min(v) >= 2, "need >= 2 indices, each >= 2"),
        "uniform_gap_max": (_float, 0.01, _positive, "must be positive"),
        "anisotropic_gap_min": (_float, 0.05, _positive, "must be positive"),
        "growth_exponent_min": (_float, 0.05, lambda v: v >= 0, "must be >= 0"),
        "low_confidence_exponent": (_float, 0.2, lambda v: v >= 0, "must be >= 0"),
        "angular_deviation_max": (_float, 1e-3, _positive, "must be positive"),
        "decay_slack": (_float, 0.1, lambda v: v >= 0, "must be >= 0"),
        "beta_epsilon": (_float, 0.0, lambda v: 0 <= v < 1, "must lie in [0, 1)"),
    },
    "potential": {
        "decay_radii": (_floats, [10.0, 20.0, 40.0, 80.0], _increasing, "must increase"),
        "beta": (_float, 0.5, _positive, "must be positive"),
        "patch_center": (_floats, [0.5, 0.3], lambda v: len(v) == 2, "needs two coordinates"),
        "patch_h": (_float, 0.02, _positive, "must be positive"),
    },
}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict
    source: str = "<string>"

    def __getitem__(self, section):
        return self.values[section]

    def get(self, section: str, key: str):
        return self.values[section][key]

    def require(self, section: str, key: str):
        v = self.values[section][key]
        if v is None:
            raise ConfigError(f"[{section}] {key} is required for this command", key=key)
        return v

    def to_dict(self) -> dict:
        return {s: dict(kv) for s, kv in self.values.items()}

    def curvature(self) -> CurvatureField:
        return build_curvature(self)


def _line_numbers(text: str) -> dict:
    lines = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        m = re.match(r"^\[([^\]]+)\]$", s)
        if m:
            section = m.group(1).strip()
            lines[(section, None)] = i
            continue
        if section and "=" in s and not s.startswith(("#", ";")):
            key = s.split("=", 1)[0].strip()
            lines.setdefault((section, key), i)
    return lines


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse, type-check, validate, and materialize defaults."""
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"), interpolation=None, strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", key=exc.option, line=exc.lineno)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", key=exc.section, line=exc.lineno)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("content before the first [section] header", line=exc.lineno)
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"malformed line: {exc.errors[0][1] if exc.errors else ''}".strip(), line=line)
    lines = _line_numbers(text)
    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", key=section, line=lines.get((section, None)))
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", key=key, line=lines.get((section, key)))
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (parse, default, check, msg) in keys.items():
            raw = cp.get(section, key, fallback=None) if cp.has_section(section) else None
            line = lines.get((section, key))
            if raw is None or raw.strip() == "":
                val = list(default) if isinstance(default, list) else default
            else:
                try:
                    val = parse(raw.strip())
                except ValueError as exc:
                    raise ConfigError(f"[{section}] {key}: cannot parse {raw.strip()!r} ({exc})", key=key, line=line)
                if check is not None and not check(val):
                    raise ConfigError(f"[{section}] {key} = {raw.strip()}: {msg}", key=key, line=line)
            values[section][key] = val
    if values["curvature"]["kind"] is None:
        raise ConfigError("[curvature] kind is required", key="kind")
    cfg = ExperimentConfig(values, source)
    try:
        build_curvature(cfg)
    except ConfigError:
        raise
    except GaussCurvError as exc:
        key = _blame(str(exc))
        raise ConfigError(f"invalid curvature: {exc}", key=key, line=lines.get(("curvature", key)))
    if values["alphap"]["alpha_max"] <= values["alphap"]["alpha_min"]:
        raise ConfigError("[alphap] alpha_max must exceed alpha_min", key="alpha_max", line=lines.get(("alphap", "alpha_max")))
    return cfg


def _blame(message: str) -> str:
    for key in ("ell", "q", "n_max", "scale", "amplitude", "family_alpha", "path"):
        if re.search(rf"\b{key}\b", message):
            return key
    return "kind"


def build_curvature(cfg: ExperimentConfig) -> CurvatureField:
    c = cfg["curvature"]
    kind = c["kind"]

    def need(key):
        if c[key] is None:
            raise ConfigError(f"[curvature] {key} is required for kind {kind}", key=key)
        return c[key]

    if kind == "RadialPower":
        return RadialPower(need("ell"), c["amplitude"])
    if kind == "ExactFamily":
        a = c["family_alpha"] if c["family_alpha"] is not None else cfg["run"]["alpha"]
        if a is None:
            raise ConfigError("ExactFamily needs [curvature] family_alpha or [run] alpha", key="family_alpha")
        return ExactFamily(a, c["scale"])
    if kind == "BumpSum":
        return BumpSum(need("ell"), need("q"), c["n_max"], c["scale"])
    path = need("path") or None
    if not path:
        raise ConfigError("[curvature] path is required for kind GridSampled", key="path")
    try:
        return GridSampled.from_file(path)
    except OSError as exc:
        raise ConfigError(f"cannot read curvature samples: {exc}", key="path")


def emit_config(cfg: ExperimentConfig) -> str:
    """Canonical text: every section and key in schema order."""
    out = []
    for section, keys in SCHEMA.items():
        out.append(f"[{section}]")
        for key in keys:
            val = _fmt(cfg.values[section][key])
            out.append(f"{key} = {val}" if val else f"{key} =")
        out.append("")
    return "\n".join(out)


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", key="config")
    return parse_config(text, str(p))
