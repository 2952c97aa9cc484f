"""Run configuration: YAML file + ``--set key=value`` overrides, JSON-Schema validated."""
from __future__ import annotations

import copy
import math
import re
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .curves import (
    Corner,
    CurvatureDefined,
    Curve,
    DecayingCurvature,
    Line,
    ScaledCurve,
    SmoothedCorner,
    tabulated_from_csv,
)
from .errors import ConfigError
from .solver import SolverNumerics

SCHEMA_VERSION = 1


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads exponent floats without a dot (1e-3)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+][0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


def _yaml(text):
    return yaml.load(text, Loader=_Loader)


_pos = {"type": "number", "exclusiveMinimum": 0}
_pos_or_null = {"anyOf": [_pos, {"type": "null"}]}
_int_pos = {"type": "integer", "minimum": 1}

CURVE_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["Line", "Corner", "SmoothedCorner", "DecayingCurvature",
                          "CurvatureDefined", "Tabulated"]},
        "phi": {"type": "number", "minimum": 0, "exclusiveMaximum": math.pi / 2},
        "Theta": {"type": "number"},
        "w": _pos,
        "c2": {"type": "number"},
        "beta": _pos,
        "horizon": _pos,
        "step": _pos,
        "curvature": {"type": "string"},
        "domain": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "resolution": {"type": "integer", "minimum": 3},
        "csv": {"type": "string"},
        "origin": {"anyOf": [{"enum": ["center", "start"]}, {"type": "number"}]},
        "scale": _pos,
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["curve", "alpha"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "curve": CURVE_SCHEMA,
        "alpha": _pos,
        "output_dir": {"type": "string"},
        "deterministic": {"const": True},
        "numerics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "L": _pos_or_null,
                "N": {"type": "integer", "minimum": 2, "multipleOf": 2},
                "N_max": {"type": "integer", "minimum": 2},
                "tol_kappa": _pos_or_null,
                "tol_energy": _pos_or_null,
                "delta": _pos,
                "max_branches": _int_pos,
                "decay_lengths": _pos,
                "L_max": _pos_or_null,
                "refine": {"type": "boolean"},
                "a1_floor": {"type": "number", "minimum": 0},
            },
        },
        "check": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "omega": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "horizon": _pos_or_null,
                "n_radial": {"type": "integer", "minimum": 4},
                "floor": {"type": "number", "minimum": 0},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kappa": {"type": "array", "items": _pos, "minItems": 1},
                "kappa_min": _pos,
                "kappa_max": _pos,
                "n_kappa": {"type": "integer", "minimum": 1},
                "spacing": {"enum": ["linear", "log"]},
                "m": _int_pos,
                "L": _pos_or_null,
                "N": {"type": "integer", "minimum": 2, "multipleOf": 2},
            },
        },
        "trial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kappa": _pos,
                "lambdas": {"type": "array", "items": _pos, "minItems": 1},
                "lambda_min": _pos,
                "lambda_max": _pos,
                "n_lambda": {"type": "integer", "minimum": 1},
                "L": _pos_or_null,
                "N": {"type": "integer", "minimum": 2, "multipleOf": 2},
            },
        },
        "validate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "profile": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["profile"],
                    "properties": {
                        "profile": {"enum": ["square", "cosine", "table"]},
                        "value": {"type": "number"},
                        "alpha": {"type": "number"},
                        "t": {"type": "array", "items": {"type": "number"}},
                        "w": {"type": "array", "items": {"type": "number"}},
                    },
                },
                "epsilon_list": {"type": "array", "items": _pos, "minItems": 1},
                "mesh_ratios": {"type": "array", "items": {"type": "number", "minimum": 4}, "minItems": 1},
                "box": {"anyOf": [{"type": "null"},
                                  {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4}]},
                "reference": {"enum": ["transverse", "raw"]},
                "budget": _pos,
                "dump_fields": {"type": "boolean"},
            },
        },
        "eigenfunction": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "x": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
                "y": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
            },
        },
        "debug": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dump_matrices": {"type": "boolean"}},
        },
    },
}

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "output_dir": "out",
    "deterministic": True,
    "numerics": {"L": None, "N": 1024, "N_max": 8192, "tol_kappa": None, "tol_energy": None,
                 "delta": 1e-3, "max_branches": 8, "decay_lengths": 6.0, "L_max": None,
                 "refine": True, "a1_floor": 1e-2},
    "check": {"omega": 0.5, "horizon": None, "n_radial": 48, "floor": 1e-2},
    "sweep": {"kappa_min": 0.55, "kappa_max": 8.0, "n_kappa": 50, "spacing": "linear", "m": 3,
              "L": None, "N": 1024},
    "trial": {"kappa": 1.0, "lambda_min": 1e-3, "lambda_max": 1.0, "n_lambda": 13, "L": None, "N": 2048},
    "validate": {"profile": {"profile": "square", "value": 0.5}, "epsilon_list": [0.4, 0.2],
                 "mesh_ratios": [4], "box": None, "reference": "transverse", "budget": 0.02,
                 "dump_fields": False},
    "eigenfunction": {"enabled": False, "x": [-10.0, 10.0, 81], "y": [-10.0, 10.0, 81]},
    "debug": {"dump_matrices": False},
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def apply_override(cfg: dict, assignment: str) -> None:
    """Apply ``dotted.key=value``; the value is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    key, raw = assignment.split("=", 1)
    try:
        value = _yaml(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse override value {raw!r}: {exc}") from exc
    node = cfg
    parts = key.strip().split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {key!r} descends into a non-mapping")
    node[parts[-1]] = value


def load_config(path=None, overrides=(), base: dict | None = None) -> dict:
    """Read, override, validate and fill defaults.  Returns the resolved mapping."""
    raw: dict = {}
    if base is not None:
        raw = copy.deepcopy(base)
    if path is not None:
        try:
            text = Path(path).read_text()
            loaded = _yaml(text) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config root must be a mapping")
        raw = _merge(raw, loaded)
    for a in overrides:
        apply_override(raw, a)
    validate(raw)
    cfg = _merge(DEFAULTS, raw)
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from exc


_SAFE = {name: getattr(np, name) for name in (
    "sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh", "cosh", "sinh", "arctan", "where", "pi")}


def _expr_callable(expr: str):
    code = compile(expr, "<curvature>", "eval")
    for name in code.co_names:
        if name not in _SAFE and name != "s":
            raise ConfigError(f"curvature expression uses unknown name {name!r}")

    def k(s):
        return eval(code, {"__builtins__": {}}, {**_SAFE, "s": np.asarray(s, dtype=float)})

    return k


def build_curve(spec: dict, base_dir: Path | None = None) -> Curve:
    kind = spec["kind"]

    def need(*names):
        missing = [n for n in names if n not in spec]
        if missing:
            raise ConfigError(f"curve kind {kind} needs {', '.join(missing)}")
        return [spec[n] for n in names]

    try:
        if kind == "Line":
            curve = Line()
        elif kind == "Corner":
            (phi,) = need("phi")
            curve = Corner(phi)
        elif kind == "SmoothedCorner":
            Theta, w = need("Theta", "w")
            curve = SmoothedCorner(Theta, w)
        elif kind == "DecayingCurvature":
            c2, beta = need("c2", "beta")
            curve = DecayingCurvature(c2, beta, spec.get("horizon", 2048.0), spec.get("step", 0.01))
        elif kind == "CurvatureDefined":
            expr, domain = need("curvature", "domain")
            curve = CurvatureDefined(_expr_callable(expr), domain, spec.get("resolution", 4001),
                                     params={"curvature": expr, "domain": list(domain)})
        else:  # Tabulated
            (path,) = need("csv")
            p = Path(path)
            if not p.is_absolute() and base_dir is not None:
                p = base_dir / p
            origin = spec.get("origin", "center")
            curve = tabulated_from_csv(p, origin=None if origin == "start" else origin)
    except (ValueError, OSError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot build curve {kind}: {exc}") from exc
    if "scale" in spec:
        curve = ScaledCurve(curve, spec["scale"])
    return curve


def solver_numerics(cfg: dict) -> SolverNumerics:
    return SolverNumerics(**cfg["numerics"])
