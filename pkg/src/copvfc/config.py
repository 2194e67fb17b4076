"""INI scenario files.

Sections mirror the parameter blocks::

    [sim]        strategy, dt_sim, dt_out, t_end, seed, label, q0, qd0
    [robot]      m1, m2, l1, l2, I1, I2, mf
    [human]      k1h, k2h, noise_std
    [schedule]   t1, t2, t3
    [admittance] Md, Dd, Kd
    [field]      K1, h_fd
    [pvfc]       Ea, kd_a, r1, r2, kappa, K2, delta1, delta2, eta_min, eta_max
    [pid]        Kp, Ki, Kd_pid

Matrix entries take a scalar (times identity) or a comma list (diagonal).
Key names are case-insensitive; anything not listed is rejected.  ``Ea``
feeds both the field and the controller.
"""

from __future__ import annotations

import configparser
from dataclasses import replace
from pathlib import Path

import numpy as np

from .admittance import AdmittanceParams
from .baselines import PidGains
from .dynamics import RobotParams
from .field import FieldParams
from .human import HumanParams, PhaseSchedule
from .pvfc import PvfcGains
from .sim import ScenarioConfig


class ConfigError(ValueError):
    """Malformed or inconsistent scenario file."""


# section -> {key: kind}; kind is "float", "int", "str", "mat2", "mat3", "vec3"
SCHEMA = {
    "sim": {"strategy": "str", "dt_sim": "float", "dt_out": "float", "t_end": "float",
            "seed": "int", "label": "str", "q0": "vec3", "qd0": "vec3"},
    "robot": {k: "float" for k in ("m1", "m2", "l1", "l2", "I1", "I2", "mf")},
    "human": {"k1h": "mat2", "k2h": "mat2", "noise_std": "float"},
    "schedule": {"t1": "float", "t2": "float", "t3": "float"},
    "admittance": {"Md": "mat2", "Dd": "mat2", "Kd": "mat2"},
    "field": {"K1": "mat2", "h_fd": "float"},
    "pvfc": {"Ea": "float", "kd_a": "float", "r1": "int", "r2": "int", "kappa": "float", "K2": "mat3",
             "delta1": "float", "delta2": "float", "eta_min": "float", "eta_max": "float"},
    "pid": {"Kp": "mat2", "Ki": "mat2", "Kd_pid": "mat2"},
}


def _convert(raw: str, kind: str):
    text = raw.strip()
    if kind == "str":
        return text
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    parts = [float(v) for v in text.split(",") if v.strip()]
    if kind == "vec3":
        if len(parts) != 3:
            raise ValueError(f"expected 3 comma-separated numbers, got {len(parts)}")
        return tuple(parts)
    n = 2 if kind == "mat2" else 3
    if len(parts) == 1:
        return parts[0] * np.eye(n)
    if len(parts) == n:
        return np.diag(parts)
    raise ValueError(f"expected a scalar or {n} diagonal entries, got {len(parts)} values")


def read_sections(path) -> dict[str, dict]:
    """Parse and type-check a scenario file into ``{section: {field: value}}``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    out: dict[str, dict] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]; expected one of {sorted(SCHEMA)}")
        lookup = {k.lower(): k for k in SCHEMA[section]}
        values = {}
        for key, raw in parser.items(section):
            name = lookup.get(key.lower())
            if name is None:
                raise ConfigError(f"[{section}] unknown key {key!r}; expected one of {sorted(SCHEMA[section])}")
            try:
                values[name] = _convert(raw, SCHEMA[section][name])
            except ValueError as exc:
                raise ConfigError(f"[{section}] {name}: {exc}") from exc
        out[section] = values
    return out


def build_config(sections: dict[str, dict]) -> ScenarioConfig:
    """Fill defaults and validate; every failure names the offending section."""
    blocks = {
        "robot": RobotParams, "schedule": PhaseSchedule, "admittance": AdmittanceParams,
        "pvfc": PvfcGains, "pid": PidGains,
    }
    built = {}
    for name, cls in blocks.items():
        built[name] = _make(name, cls, sections.get(name, {}))
    sim = dict(sections.get("sim", {}))
    seed = sim.pop("seed", 0)
    if seed < 0:
        raise ConfigError("[sim] seed: must be non-negative")
    built["human"] = _make("human", HumanParams, {**sections.get("human", {}), "seed": seed})
    built["field"] = _make("field", FieldParams, {**sections.get("field", {}), "Ea": built["pvfc"].Ea})
    try:
        return ScenarioConfig(**sim, **built)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[sim] {exc}") from exc


def _make(section, cls, values):
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def parse_config(path) -> ScenarioConfig:
    return build_config(read_sections(path))


def apply_overrides(cfg: ScenarioConfig, strategy=None, seed=None, dt=None) -> ScenarioConfig:
    """Command-line overrides on top of a parsed config."""
    try:
        if strategy is not None:
            cfg = replace(cfg, strategy=strategy)
        if seed is not None:
            if seed < 0:
                raise ValueError("seed must be non-negative")
            cfg = cfg.with_seed(seed)
        if dt is not None:
            cfg = replace(cfg, dt_sim=dt)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg
