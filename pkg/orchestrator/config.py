"""Scenario configuration: JSON file merged over the built-in scenario defaults."""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict

from loguru import logger

from coupling.interconnect import MODES
from mesh.generators import GENERATORS

BC_KINDS = ("no-slip", "inflow", "lid", "body", "periodic")
SECTIONS = ("mesh", "physics", "bc", "body", "coupling")
TOP_LEVEL = ("scenario", "seed", "out_dir", "dt", "t_end") + SECTIONS


class ConfigError(ValueError):
    """Invalid configuration value, reported with its dotted key path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class ScenarioConfig:
    scenario: str
    seed: int = 0
    out_dir: str = ""
    dt: float = 0.01
    t_end: float = 0.1
    mesh: Dict[str, Any] = field(default_factory=dict)
    physics: Dict[str, float] = field(default_factory=dict)
    bc: Dict[str, str] = field(default_factory=dict)
    body: Dict[str, Any] = field(default_factory=dict)
    coupling: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.out_dir:
            self.out_dir = os.path.join(os.getenv("PORTFLOW_OUT_DIR", "out"), self.scenario)

    @property
    def steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))


def _number(raw: Dict[str, Any], key: str, path: str, minimum: float | None = None, strict: bool = False) -> None:
    if key not in raw:
        return
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}{key}", f"expected a number, got {value!r}")
    if minimum is not None and (value <= minimum if strict else value < minimum):
        rel = ">" if strict else ">="
        raise ConfigError(f"{path}{key}", f"must be {rel} {minimum}, got {value}")


def _vector(raw: Dict[str, Any], key: str, path: str, size: int) -> None:
    if key not in raw:
        return
    value = raw[key]
    if not isinstance(value, list) or len(value) != size or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
    ):
        raise ConfigError(f"{path}{key}", f"expected a list of {size} numbers, got {value!r}")


def _merge(defaults: Dict[str, Any], raw: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(defaults)
    for key, value in raw.items():
        if key in SECTIONS and isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = {**out[key], **value}
        else:
            out[key] = value
    return out


def validate(raw: Dict[str, Any]) -> None:
    for key in raw:
        if key not in TOP_LEVEL:
            raise ConfigError(key, f"unknown key (allowed: {', '.join(TOP_LEVEL)})")
    if not isinstance(raw.get("scenario"), str):
        raise ConfigError("scenario", "missing or not a string")
    if "seed" in raw and (isinstance(raw["seed"], bool) or not isinstance(raw["seed"], int)):
        raise ConfigError("seed", f"expected an integer, got {raw['seed']!r}")
    _number(raw, "dt", "", 0.0, strict=True)
    _number(raw, "t_end", "", 0.0, strict=True)
    for section in SECTIONS:
        if section in raw and not isinstance(raw[section], dict):
            raise ConfigError(section, "expected an object")

    mesh = raw.get("mesh", {})
    if "file" not in mesh and mesh and mesh.get("kind") not in GENERATORS:
        raise ConfigError("mesh.kind", f"unknown mesh kind {mesh.get('kind')!r} (have {sorted(GENERATORS)})")
    _number(mesh, "res", "mesh.", 1)
    _number(mesh, "length", "mesh.", 0.0, strict=True)
    _number(mesh, "r_in", "mesh.", 0.0, strict=True)
    _number(mesh, "r_out", "mesh.", 0.0, strict=True)
    if "res" in mesh and not isinstance(mesh["res"], int):
        raise ConfigError("mesh.res", f"expected an integer, got {mesh['res']!r}")
    if "r_in" in mesh and "r_out" in mesh and mesh["r_in"] >= mesh["r_out"]:
        raise ConfigError("mesh.r_out", "must exceed mesh.r_in")

    physics = raw.get("physics", {})
    _number(physics, "kappa", "physics.", 0.0)
    _number(physics, "rho", "physics.", 0.0, strict=True)
    _number(physics, "lambda", "physics.", 0.0)

    for tag, kind in raw.get("bc", {}).items():
        if kind not in BC_KINDS:
            raise ConfigError(f"bc.{tag}", f"unknown boundary kind {kind!r} (have {', '.join(BC_KINDS)})")

    body = raw.get("body", {})
    _number(body, "mass", "body.", 0.0, strict=True)
    _number(body, "radius", "body.", 0.0, strict=True)
    _vector(body, "gravity", "body.", 3)
    _vector(body, "momentum", "body.", 6)
    _vector(body, "xi", "body.", 3)
    _vector(body, "inertia", "body.", 3)

    coupling = raw.get("coupling", {})
    if "mode" in coupling and coupling["mode"] not in MODES:
        raise ConfigError("coupling.mode", f"must be one of {MODES}, got {coupling['mode']!r}")
    if "subiterations" in coupling:
        n = coupling["subiterations"]
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ConfigError("coupling.subiterations", f"expected an integer >= 1, got {n!r}")
    _number(coupling, "amplitude", "coupling.", 0.0)
    _number(coupling, "frequency", "coupling.", 0.0)
    if "pressure_load" in coupling and not isinstance(coupling["pressure_load"], bool):
        raise ConfigError("coupling.pressure_load", f"expected true or false, got {coupling['pressure_load']!r}")


def config_from_dict(raw: Dict[str, Any]) -> ScenarioConfig:
    """Validate and merge over the scenario defaults."""
    from orchestrator.scenarios import SCENARIOS

    if not isinstance(raw, dict):
        raise ConfigError("$", "configuration must be a JSON object")
    name = raw.get("scenario")
    if name not in SCENARIOS:
        raise ConfigError("scenario", f"unknown scenario {name!r} (have {sorted(SCENARIOS)})")
    merged = _merge(SCENARIOS[name].defaults, raw)
    validate(merged)
    return ScenarioConfig(**merged)


def load_config(path: str) -> ScenarioConfig:
    if not os.path.exists(path):
        raise ConfigError("$", f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError("$", f"invalid JSON at line {e.lineno}: {e.msg}") from None
    config = config_from_dict(raw)
    logger.info(f"Loaded config for scenario '{config.scenario}' from {path}")
    return config


def resolve_tags(config: ScenarioConfig, complex_) -> None:
    """Every boundary tag in the config must name a component of the mesh."""
    for tag, kind in config.bc.items():
        if kind == "periodic":
            if not complex_.is_periodic:
                raise ConfigError(f"bc.{tag}", "periodic boundary on a mesh without a period")
            continue
        if tag not in complex_.components:
            raise ConfigError(f"bc.{tag}", f"no boundary component '{tag}' (have {sorted(complex_.components)})")
