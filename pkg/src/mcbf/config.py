"""Run-configuration schema and loading.

Configs are JSON: human-editable, schema-checked before any run, unknown keys
rejected.  The `_refs` key is reserved for free-form documentation of where
parameter values come from and is ignored by the loader.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema

from .barrier import ClassKe
from .errors import ConfigError
from .scenarios import ConnectivityParams, ObstacleSpec
from .sdp import SolverSettings
from .sim import SimConfig

SCENARIOS = ("connectivity", "custom", "obstacle_disk", "obstacle_box")
FILTERS = ("exponential", "general", "indefinite", "smallest_eig", "baseline_eigen", "none")
_FILTERS_BY_SCENARIO = {
    "connectivity": ("exponential", "general", "smallest_eig", "baseline_eigen", "none"),
    "custom": ("exponential", "general", "smallest_eig", "baseline_eigen", "none"),
    "obstacle_disk": ("indefinite", "none"),
    "obstacle_box": ("indefinite", "none"),
}

_POS = {"type": "number", "exclusiveMinimum": 0}
_VEC2 = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

_CLASSK_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["linear", "cubic", "scaled_tanh"]},
        "c": _POS,
        "s": _POS,
    },
    "required": ["kind", "c"],
    "additionalProperties": False,
}

_SIM_SCHEMA = {
    "type": "object",
    "properties": {
        "dt": _POS,
        "duration": _POS,
        "seed": {"type": ["integer", "null"]},
        "solver": {
            "type": "object",
            "properties": {
                "feas_tol": _POS,
                "rel_obj_tol": _POS,
                "max_iter": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "scenario": {"enum": list(SCENARIOS)},
        "params": {"type": "object"},
        "filter": {"enum": list(FILTERS)},
        "classK": _CLASSK_SCHEMA,
        "sim": _SIM_SCHEMA,
        "output": {"type": "string"},
        "_refs": {"type": "object"},
    },
    "required": ["scenario"],
    "additionalProperties": False,
}

_CONN_PARAMS_SCHEMA = {
    "type": "object",
    "properties": {
        "R": _POS,
        "eps": {"type": "number", "minimum": 0},
        "c_alpha": _POS,
        "c_collision": _POS,
        "r_agent": _POS,
        "k_gain": _POS,
        "priority_agent": {"type": "integer", "minimum": 0},
        "c_perp": {"type": "number", "minimum": 0},
        "initial_positions": {"type": "array", "items": _VEC2, "minItems": 2},
        "targets": {"type": "array", "items": _VEC2, "minItems": 2},
        "pins": {"type": "array",
                 "items": {"type": "array",
                           "prefixItems": [{"type": "integer", "minimum": 0},
                                           {"type": "number"}],
                           "minItems": 2, "maxItems": 2}},
    },
    "additionalProperties": False,
}

_OBSTACLE_PARAMS_SCHEMA = {
    "type": "object",
    "properties": {
        "start": _VEC2,
        "target": _VEC2,
        "k_gain": _POS,
        "c_perp": {"type": "number", "minimum": 0},
        "center": _VEC2,
        "radius": _POS,
        "faces": {"type": "array",
                  "items": {"type": "array", "items": {"type": "number"},
                            "minItems": 3, "maxItems": 3},
                  "minItems": 3},
    },
    "additionalProperties": False,
}


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Parsed and normalized run configuration."""

    scenario: str
    filter_variant: str
    classK: ClassKe
    sim: SimConfig
    c_perp: float
    conn: Optional[ConnectivityParams] = None
    initial_positions: Optional[list] = None
    targets: Optional[list] = None
    extra_pins: tuple = ()
    obstacle_spec: Optional[ObstacleSpec] = None
    start: Optional[list] = None
    target: Optional[list] = None
    obstacle_k_gain: float = 1.0
    output: Optional[Path] = None
    echo: dict = field(default_factory=dict)


def _schema_check(instance, schema, prefix=""):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: str(e.path))
    if errors:
        e = errors[0]
        where = prefix + ".".join(str(p) for p in e.path)
        raise ConfigError(f"invalid config at '{where or '(top level)'}': {e.message}")


def validate_dict(raw: dict) -> dict:
    """Schema-check a config dict and return it normalized with defaults applied.

    Raises ConfigError naming the offending key on any violation.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _schema_check(raw, SCHEMA)
    scenario = raw["scenario"]
    params = dict(raw.get("params", {}))
    if scenario in ("connectivity", "custom"):
        _schema_check(params, _CONN_PARAMS_SCHEMA, prefix="params.")
        defaults = {"R": 1.3, "eps": 0.1, "c_alpha": 1.0, "c_collision": 5.0,
                    "r_agent": 0.25, "k_gain": 1.0, "priority_agent": 0, "c_perp": 0.0}
        params = {**defaults, **params}
        if 2.0 * params["r_agent"] >= params["R"]:
            raise ConfigError("invalid config at 'params.r_agent': need 2*r_agent < R")
        if scenario == "custom" and "initial_positions" not in params:
            raise ConfigError("invalid config at 'params.initial_positions': "
                              "custom scenario requires explicit initial positions")
        if scenario == "connectivity":
            for key in ("targets", "pins"):
                if key in params:
                    raise ConfigError(f"invalid config at 'params.{key}': "
                                      "only the custom scenario accepts this key")
            if "initial_positions" in params and len(params["initial_positions"]) != 5:
                raise ConfigError("invalid config at 'params.initial_positions': "
                                  "the connectivity scenario runs exactly five agents")
        p_agents = len(params.get("initial_positions", range(5)))
        if params["priority_agent"] >= p_agents:
            raise ConfigError("invalid config at 'params.priority_agent': index out of range")
        pins = params.get("pins", [])
        seen = set()
        for idx, _ in pins:
            if idx in seen:
                raise ConfigError(f"invalid config at 'params.pins': duplicate pin index {idx}")
            seen.add(idx)
            if idx >= 2 * p_agents:
                raise ConfigError(f"invalid config at 'params.pins': channel {idx} out of range")
        if "targets" in params and len(params["targets"]) != p_agents:
            raise ConfigError("invalid config at 'params.targets': one target per agent")
    else:
        _schema_check(params, _OBSTACLE_PARAMS_SCHEMA, prefix="params.")
        if scenario == "obstacle_disk":
            if "faces" in params:
                raise ConfigError("invalid config at 'params.faces': not a disk parameter")
            defaults = {"start": [-2.0, 0.15], "target": [2.0, 0.15], "k_gain": 1.0,
                        "c_perp": 1.0, "center": [0.0, 0.0], "radius": 1.0}
        else:
            if "center" in params or "radius" in params:
                raise ConfigError("invalid config at 'params.center': not a box parameter")
            defaults = {"start": [-2.2, -0.4], "target": [2.2, 1.4], "k_gain": 1.0,
                        "c_perp": 1.0,
                        "faces": [[-1.0, 0.0, 1.0], [1.0, 0.0, 1.0],
                                  [0.0, -1.0, 1.0], [0.0, 1.0, 1.0]]}
        params = {**defaults, **params}

    default_filter = "indefinite" if scenario.startswith("obstacle") else "exponential"
    filt = raw.get("filter", default_filter)
    if filt not in _FILTERS_BY_SCENARIO[scenario]:
        raise ConfigError(f"invalid config at 'filter': {filt!r} cannot drive "
                          f"the {scenario} scenario")

    classK = dict(raw.get("classK", {"kind": "linear", "c": params.get("c_alpha", 1.0)}))
    sim = dict(raw.get("sim", {}))
    solver = {"feas_tol": 1e-7, "rel_obj_tol": 1e-6, "max_iter": 200,
              **sim.get("solver", {})}
    sim = {"dt": 1.0 / 240.0, "duration": 10.0, "seed": None, **sim, "solver": solver}
    if sim["duration"] < sim["dt"]:
        raise ConfigError("invalid config at 'sim.duration': must cover at least one step")

    normalized = {"scenario": scenario, "params": params, "filter": filt,
                  "classK": classK, "sim": sim}
    if "output" in raw:
        normalized["output"] = raw["output"]
    if "_refs" in raw:
        normalized["_refs"] = raw["_refs"]
    _schema_check(normalized, SCHEMA)
    return normalized


def from_dict(raw: dict) -> RunConfig:
    norm = validate_dict(raw)
    params = norm["params"]
    scenario = norm["scenario"]
    try:
        classK = ClassKe.from_dict(norm["classK"])
        solver = SolverSettings(**norm["sim"]["solver"])
        sim = SimConfig(dt=norm["sim"]["dt"], duration=norm["sim"]["duration"],
                        seed=norm["sim"]["seed"], solver=solver)
        kwargs = dict(scenario=scenario, filter_variant=norm["filter"], classK=classK,
                      sim=sim, c_perp=params.get("c_perp", 0.0),
                      output=Path(norm["output"]) if "output" in norm else None,
                      echo=norm)
        if scenario in ("connectivity", "custom"):
            conn = ConnectivityParams(
                R=params["R"], eps=params["eps"], c_alpha=params["c_alpha"],
                c_collision=params["c_collision"], r_agent=params["r_agent"],
                k_gain=params["k_gain"], priority_agent=params["priority_agent"])
            return RunConfig(conn=conn,
                             initial_positions=params.get("initial_positions"),
                             targets=params.get("targets"),
                             extra_pins=tuple((int(i), float(v))
                                              for i, v in params.get("pins", [])),
                             **kwargs)
        if scenario == "obstacle_disk":
            spec = ObstacleSpec.disk2d(center=params["center"], radius=params["radius"])
        else:
            spec = ObstacleSpec.box2d([((f[0], f[1]), f[2]) for f in params["faces"]])
        return RunConfig(obstacle_spec=spec, start=params["start"], target=params["target"],
                         obstacle_k_gain=params["k_gain"], **kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return from_dict(raw)
