"""JSON schemas for experiment configs and emitted artifacts."""

from __future__ import annotations

import jsonschema

from .errors import ConfigurationError, IntegrityError

KINDS = ("solve_global", "solve_local", "estimate", "consistency", "scaling", "uniqueness", "contraction",
         "norm_report")

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer"}
_NULLABLE_NUM = {"type": ["number", "null"]}

GRID = {
    "type": "object",
    "properties": {
        "n_per_axis": {"type": "integer", "minimum": 8},
        "box_length": _POS,
        "dealias_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    },
    "additionalProperties": False,
}

POLICY = {
    "type": "object",
    "properties": {
        "center_stride": {"type": "integer", "minimum": 1},
        "min_radius_cells": _POS,
        "include_full_torus": {"type": "boolean"},
    },
    "additionalProperties": False,
}

NORM = {
    "type": "object",
    "properties": {
        "s": _NUM,
        "p": {"type": "number", "minimum": 1},
        "q": {"type": "number", "minimum": 1},
        "r": {"oneOf": [{"const": 1}, {"const": "inf"}]},
        "policy": POLICY,
    },
    "additionalProperties": False,
}

PARAMS = {
    "type": "object",
    "properties": {"mu": _POS, "nu": _POS, "h": _POS},
    "additionalProperties": False,
}

SOLVER = {
    "type": "object",
    "properties": {
        "params": PARAMS,
        "T": _POS,
        "n_steps": {"type": "integer", "minimum": 2},
        "picard_tol": _POS,
        "picard_max_iter": {"type": "integer", "minimum": 1},
        "delta": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "normalize": {"type": "boolean"},
        "blowup_factor": _POS,
    },
    "additionalProperties": False,
}

INITIAL_DATA = {
    "type": "object",
    "properties": {
        "preset": {"enum": ["RANDOM", "TAYLOR_GREEN", "ORSZAG_TANG", "ZERO", None]},
        "amplitude": {"type": "number", "minimum": 0},
        "alpha": _NUM,
        "k_cut": _NULLABLE_NUM,
        "path": {"type": ["string", "null"]},
    },
    "additionalProperties": False,
}

JOB = {
    "type": "object",
    "properties": {
        "lemma_id": {"enum": ["DIV_VW", "DIV_CURLINV_W", "DIV_V_CURLINV", "ALGEBRA", "HEAT", "DUHAMEL", "INTERP"]},
        "n_samples": {"type": "integer", "minimum": 1},
        "alpha": _NUM,
        "k_cut": _NULLABLE_NUM,
        "snapshot_stride": {"type": "integer", "minimum": 0},
        "epsilons": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "lam": {"type": "number", "exclusiveMinimum": 1},
        "mode": {"enum": ["mild", "heat"]},
        "tolerance": _POS,
    },
    "additionalProperties": False,
}

CONFIG = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "seed": {"type": "integer", "minimum": 0},
        "grid": GRID,
        "solver": SOLVER,
        "norm": NORM,
        "initial_data": INITIAL_DATA,
        "output_dir": {"type": "string"},
        "job": JOB,
    },
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"kind": {"const": "estimate"}}},
         "then": {"required": ["job"], "properties": {"job": {"required": ["lemma_id", "n_samples"]}}}},
        {"if": {"properties": {"kind": {"const": "contraction"}}},
         "then": {"required": ["job"], "properties": {"job": {"required": ["n_samples"]}}}},
    ],
}

_SHA = {"type": "string", "pattern": "^[0-9a-f]{64}$"}

MANIFEST = {
    "type": "object",
    "required": ["format", "kind", "status", "exit_code", "config", "inputs", "artifacts"],
    "properties": {
        "format": {"const": "hallmhd-manifest/1"},
        "kind": {"enum": list(KINDS)},
        "status": {"enum": ["ok", "nonconvergence", "integrity", "config", "io"]},
        "exit_code": {"type": "integer", "minimum": 0, "maximum": 5},
        "config": {"type": "object"},
        "inputs": {"type": "object", "additionalProperties": _SHA},
        "artifacts": {"type": "object", "additionalProperties": _SHA},
    },
}

ESTIMATE_REPORT = {
    "type": "object",
    "required": ["lemma_id", "samples", "max_ratio", "grid", "spec", "seed"],
    "properties": {
        "lemma_id": {"type": "string"},
        "samples": {"type": "integer", "minimum": 0},
        "skipped": {"type": "integer", "minimum": 0},
        "max_ratio": {"type": "number", "minimum": 0},
        "grid": GRID,
        "spec": NORM,
        "seed": {"type": "integer"},
        "options": {"type": "object"},
    },
}

NORM_REPORT = {
    "type": "object",
    "required": ["field_id", "s", "p", "q", "r", "value", "policy", "j_range"],
    "properties": {
        "field_id": {"type": "string"},
        "value": {"type": "number", "minimum": 0},
        "j_range": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
    },
}

SOLVE_REPORT = {
    "type": "object",
    "required": ["status", "converged", "iterates", "residual", "y_norm", "solution_norm"],
    "properties": {
        "status": {"enum": ["converged", "max_iter", "diverged"]},
        "converged": {"type": "boolean"},
        "iterates": {"type": "integer", "minimum": 0},
    },
}

FAILURE = {
    "type": "object",
    "required": ["error", "message", "exit_code"],
    "properties": {"error": {"type": "string"}, "message": {"type": "string"}, "exit_code": {"type": "integer"}},
}

GENERIC_REPORT = {"type": "object"}


def validate_config(doc) -> None:
    try:
        jsonschema.validate(doc, CONFIG)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"config invalid at {where}: {exc.message}") from None


def validate_artifact(doc, schema: dict, name: str) -> None:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise IntegrityError(f"artifact {name} failed schema validation: {exc.message}") from None
