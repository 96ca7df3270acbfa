"""Run configuration: a flat TOML file with dotted sections.

Every key is validated against the schema below; unknown sections or keys
are rejected so that experiment records stay reviewable.  A loaded config
can be re-serialized in a normalized form (defaults filled in, keys
sorted); loading that normalized text reproduces the same config, which is
what the round-trip test pins down.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .damping import CoefficientProfile, CutoffSet, DampingKind, DampingSpec, default_cutoffs

__all__ = ["ConfigError", "RunConfig", "load_config", "serialize_config"]


class ConfigError(ValueError):
    pass


_DEFAULT_CUT_POINTS = [0.30, 0.34, 0.38, 0.42, 0.58, 0.62, 0.66, 0.70]

# section -> key -> (type, default); REQUIRED marks keys without defaults
_REQUIRED = object()
_SCHEMA: dict[str, dict[str, tuple]] = {
    "scenario": {
        "name": (str, _REQUIRED),
        "p": (float, _REQUIRED),
        "mode": (str, "distributed"),
        "n_cells": (int, _REQUIRED),
        "t_final": (float, _REQUIRED),
        "snapshot_stride": (int, 1),
        "record_dissipation": (bool, False),
        "seed": (int, 0),
    },
    "damping": {
        "kind": (str, _REQUIRED),
        "slope": (float, 1.0),
        "q": (float, 1.0),
        "alpha": (float, 1.0),
        "eta": (float, 1.0),
    },
    "profile": {
        "b": (float, 0.25),
        "c": (float, 0.75),
        "a0": (float, 1.0),
        "ramp": (float, 0.0625),
    },
    "cutoffs": {
        "points": (list, _DEFAULT_CUT_POINTS),
    },
    "initial": {
        "preset": (str, "sine"),
        "amplitude": (float, 1.0),
    },
    "weights": {
        "m": (int, 1),
        "eta": (float, 1.0),
    },
    "fit": {
        "models": (list, ["exponential", "algebraic"]),
        "window": (list, []),
    },
    "multipliers": {
        "enabled": (bool, True),
        "window": (list, []),
    },
    "output": {
        "directory": (str, "out"),
    },
    "sweep": {
        "p": (list, []),
        "q": (list, []),
        "t_final": (float, 0.0),
        "n_cells": (int, 0),
    },
}


@dataclass
class RunConfig:
    """Validated, normalized configuration of one scenario (or sweep)."""

    raw: dict[str, dict[str, Any]]
    path: str = ""

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.raw[section]

    @property
    def name(self) -> str:
        return self.raw["scenario"]["name"]

    def damping_spec(self) -> DampingSpec:
        d = self.raw["damping"]
        kind = d["kind"]
        if kind == "linear":
            return DampingSpec.linear(d["slope"])
        if kind == "polynomial":
            return DampingSpec.polynomial(d["q"], d["alpha"], d["eta"])
        if kind == "expflat":
            return DampingSpec.expflat(d["q"], d["alpha"], d["eta"])
        raise ConfigError(f"unknown damping kind {kind!r}")

    def profile(self) -> CoefficientProfile:
        pr = self.raw["profile"]
        if self.raw["scenario"]["mode"] == "boundary":
            return CoefficientProfile.zero()
        return CoefficientProfile(b=pr["b"], c=pr["c"], a0=pr["a0"], ramp=pr["ramp"])

    def cutoffs(self) -> CutoffSet:
        return CutoffSet(points=tuple(self.raw["cutoffs"]["points"]))


def _coerce(section: str, key: str, typ, value):
    if typ is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"[{section}] {key} must be an integer")
        return value
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"[{section}] {key} must be a boolean")
        return value
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"[{section}] {key} must be a string")
        return value
    if typ is list:
        if not isinstance(value, list):
            raise ConfigError(f"[{section}] {key} must be an array")
        return list(value)
    raise ConfigError(f"[{section}] {key} has unsupported type")


def _validate(data: dict, path: str) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level must be a table of sections")
    out: dict[str, dict[str, Any]] = {}
    for section, content in data.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(content, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key in content:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
    for section, keys in _SCHEMA.items():
        got = data.get(section, {})
        if section == "sweep" and "sweep" not in data:
            continue  # sweep section only materializes when present
        sec_out = {}
        for key, (typ, default) in keys.items():
            if key in got:
                sec_out[key] = _coerce(section, key, typ, got[key])
            elif default is _REQUIRED:
                raise ConfigError(f"missing required key {key!r} in [{section}]")
            else:
                sec_out[key] = default.copy() if isinstance(default, list) else default
        out[section] = sec_out

    sc = out["scenario"]
    if sc["p"] <= 1.0:
        raise ConfigError("[scenario] p must be > 1 (the endpoint exponents are out of scope)")
    if sc["mode"] not in ("distributed", "boundary"):
        raise ConfigError("[scenario] mode must be 'distributed' or 'boundary'")
    if sc["n_cells"] < 2:
        raise ConfigError("[scenario] n_cells must be >= 2")
    if sc["t_final"] < 0:
        raise ConfigError("[scenario] t_final must be nonnegative")
    if sc["snapshot_stride"] < 1:
        raise ConfigError("[scenario] snapshot_stride must be >= 1")
    if out["damping"]["kind"] not in ("linear", "polynomial", "expflat"):
        raise ConfigError("[damping] kind must be linear, polynomial or expflat")
    pts = out["cutoffs"]["points"]
    if len(pts) != 8 or any(not isinstance(v, (int, float)) for v in pts):
        raise ConfigError("[cutoffs] points must be 8 numbers")
    if len(out["fit"]["window"]) not in (0, 2):
        raise ConfigError("[fit] window must be [lo, hi] or omitted")
    if len(out["multipliers"]["window"]) not in (0, 2):
        raise ConfigError("[multipliers] window must be [lo, hi] or omitted")
    for model in out["fit"]["models"]:
        if model not in ("exponential", "algebraic", "logpower"):
            raise ConfigError(f"[fit] unknown model {model!r}")
    cfg = RunConfig(raw=out, path=path)
    # constructing the domain objects performs their own validation
    cfg.damping_spec()
    cfg.profile()
    cfg.cutoffs()
    return cfg


def load_config(path) -> RunConfig:
    """Parse and validate a TOML run configuration."""
    try:
        with open(path, "rb") as fh:
            data = _toml.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML in {path}: {exc}") from exc
    return _validate(data, str(path))


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)}")


def serialize_config(cfg: RunConfig) -> str:
    """Normalized TOML text (sections and keys in schema order)."""
    lines = []
    for section in _SCHEMA:
        if section not in cfg.raw:
            continue
        lines.append(f"[{section}]")
        for key in _SCHEMA[section]:
            lines.append(f"{key} = {_fmt_value(cfg.raw[section][key])}")
        lines.append("")
    return "\n".join(lines)
