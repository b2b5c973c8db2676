"""Experiment configuration: JSON documents validated against strict schemas.

Unknown keys are hard errors everywhere (additionalProperties: false): a
typoed option must never silently fall back to a default.  The sha256 of the
effective config (after any CLI seed override) is stamped into every output
file, so results are traceable to the exact configuration that produced them.
"""

from __future__ import annotations

import hashlib
import json

import jsonschema

EXPERIMENT_KINDS = ("grad_accuracy", "optimize", "verify_bounds")


class ConfigError(Exception):
    """Configuration rejected before any experiment work started."""


_NOISE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["none", "uniform", "sinusoidal", "adversarial_sign"]},
        "bound": {"type": "number", "minimum": 0},
        "omega": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["kind"],
}

_ESTIMATOR_NAMES = ["gsg", "cgsg", "liod", "ligd", "fd"]

_POSITIVE_NUMBER = {"type": "number", "exclusiveMinimum": 0}

_GRAD_ACCURACY_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiment": {"const": "grad_accuracy"},
        "experiment_id": {"type": "string", "minLength": 1},
        "functions": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "estimators": {
            "type": "array",
            "items": {"enum": _ESTIMATOR_NAMES},
            "minItems": 1,
        },
        "sigmas": {"type": "array", "items": _POSITIVE_NUMBER, "minItems": 1},
        "n_factors": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 1,
        },
        "trials": {"type": "integer", "minimum": 1},
        "noise": _NOISE_SCHEMA,
        "seed": {"type": "integer", "minimum": 0},
        "eval_point": {"enum": ["random", "origin"]},
    },
    "required": ["experiment", "functions", "estimators", "sigmas", "trials"],
}

_STEPPER_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "type": {"enum": ["line_search", "fixed", "adam"]},
        "c1": _POSITIVE_NUMBER,
        "tau": _POSITIVE_NUMBER,
        "eps_f": {"type": "number", "minimum": 0},
        "alpha0": _POSITIVE_NUMBER,
        "alpha_min": _POSITIVE_NUMBER,
        "alpha_max": _POSITIVE_NUMBER,
        "alpha": _POSITIVE_NUMBER,
        "beta1": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "beta2": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "eps_hat": _POSITIVE_NUMBER,
    },
    "required": ["type"],
}

_METHOD_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_-]+$"},
        "estimator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": _ESTIMATOR_NAMES},
                "sigma": _POSITIVE_NUMBER,
                "num_directions": {"type": "integer", "minimum": 1},
                "adaptive": {"type": "boolean"},
                "theta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
            },
            "required": ["kind"],
        },
        "stepper": _STEPPER_SCHEMA,
    },
    "required": ["name", "estimator", "stepper"],
}

_OPTIMIZE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiment": {"const": "optimize"},
        "experiment_id": {"type": "string", "minLength": 1},
        "functions": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "methods": {"type": "array", "items": _METHOD_SCHEMA, "minItems": 1},
        "seeds": {
            "type": "array",
            "items": {"type": "integer", "minimum": 0},
            "minItems": 1,
        },
        "budget": {"type": "integer", "minimum": 2},
        "noise": _NOISE_SCHEMA,
        "x0": {
            "anyOf": [
                {"enum": ["random", "origin", "ones"]},
                {"type": "array", "items": {"type": "number"}, "minItems": 1},
            ]
        },
        "seed": {"type": "integer", "minimum": 0},
    },
    "required": ["experiment", "functions", "methods", "budget"],
}

_CHECK_NAMES = [
    "interpolation_error_bound",
    "gsg_variance_domination",
    "gsg_sample_size",
    "gaussian_moment_identities",
    "armijo_decrease_guarantee",
    "noise_bound",
]

_VERIFY_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiment": {"const": "verify_bounds"},
        "experiment_id": {"type": "string", "minLength": 1},
        "checks": {"type": "array", "items": {"enum": _CHECK_NAMES}, "minItems": 1},
        "trials": {"type": "integer", "minimum": 1},
        "samples": {"type": "integer", "minimum": 10000},
        "variance_reps": {"type": "integer", "minimum": 100},
        "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "theta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "dimensions": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 1,
        },
        "sigmas": {"type": "array", "items": _POSITIVE_NUMBER, "minItems": 1},
        "noise": _NOISE_SCHEMA,
        "declared_eps_f": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
    },
    "required": ["experiment"],
}

_SCHEMAS = {
    "grad_accuracy": _GRAD_ACCURACY_SCHEMA,
    "optimize": _OPTIMIZE_SCHEMA,
    "verify_bounds": _VERIFY_SCHEMA,
}


def validate_config(cfg: dict) -> dict:
    """Schema-check a parsed config; returns it unchanged on success."""
    if not isinstance(cfg, dict):
        raise ConfigError(f"config must be a JSON object, got {type(cfg).__name__}")
    kind = cfg.get("experiment")
    if kind not in _SCHEMAS:
        raise ConfigError(
            f"config needs \"experiment\" set to one of {list(_SCHEMAS)}, got {kind!r}"
        )
    try:
        jsonschema.validate(cfg, _SCHEMAS[kind])
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "(top level)"
        raise ConfigError(f"invalid config at {path}: {exc.message}") from exc
    return cfg


def load_config(path: str) -> dict:
    """Read, parse, and validate a JSON experiment config."""
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return validate_config(cfg)


def config_hash(cfg: dict) -> str:
    """sha256 of the canonical JSON encoding of the effective config."""
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
