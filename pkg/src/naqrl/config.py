"""Experiment configuration: JSON schema, validation and loading."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from . import records

KINDS = ("qlearn", "value_iter", "pqc_opt", "pqc_agent", "advantage", "noncomm")

_NUM = {"type": "number"}
_MATRIX = {
    "type": "object",
    "required": ["rows", "cols", "re"],
    "properties": {
        "rows": {"type": "integer", "minimum": 1},
        "cols": {"type": "integer", "minimum": 1},
        "re": {"type": "array", "items": _NUM},
        "im": {"type": "array", "items": _NUM},
    },
}
_STATE = {
    "type": "object",
    "required": ["n", "re"],
    "properties": {"n": {"type": "integer", "minimum": 1, "maximum": 12},
                   "re": {"type": "array", "items": _NUM},
                   "im": {"type": "array", "items": _NUM}},
}
_ACTION = {
    "type": "object",
    "properties": {"name": {"type": "string"}, "matrix": _MATRIX, "hamiltonian": _MATRIX,
                   "dt": _NUM, "targets": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
    "oneOf": [{"required": ["matrix"]}, {"required": ["hamiltonian", "dt"]}],
}
ENV_SCHEMA = {
    "type": "object",
    "required": ["n", "gamma", "reward", "actions"],
    "properties": {
        "n": {"type": "integer", "minimum": 1, "maximum": 12},
        "gamma": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "noise_p": {"type": "number", "minimum": 0, "maximum": 1},
        "horizon": {"type": "integer", "minimum": 1},
        "reward": _MATRIX,
        "actions": {"type": "array", "minItems": 1, "items": _ACTION},
        "initial": _STATE,
    },
}
TEMPLATE_SCHEMA = {
    "type": "object",
    "required": ["n", "params", "placements"],
    "properties": {
        "n": {"type": "integer", "minimum": 1, "maximum": 12},
        "params": {"type": "integer", "minimum": 0},
        "placements": {"type": "array", "items": {
            "type": "object", "required": ["kind", "targets"],
            "properties": {"kind": {"enum": ["R", "CR", "H", "CNOT"]},
                           "targets": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                           "param_index": {"type": "integer", "minimum": 0}}}},
    },
}
_THETA = {"type": "array", "items": _NUM}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "naqrl experiment config",
    "type": "object",
    "required": ["kind", "seed", "out_dir"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "out_dir": {"type": "string"},
        "replicates": {"type": "integer", "minimum": 1},
        "env": ENV_SCHEMA,
        "template": TEMPLATE_SCHEMA,
        "learner": {"type": "object", "properties": {
            "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "epsilon": {"type": "number", "minimum": 0, "maximum": 1},
            "episodes": {"type": "integer", "minimum": 0},
            "fid_threshold": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "registry_cap": {"type": "integer", "minimum": 1}}},
        "value_iter": {"type": "object", "properties": {
            "tol": {"type": "number", "exclusiveMinimum": 0},
            "max_sweeps": {"type": "integer", "minimum": 1}}},
        "pqc": {"type": "object", "required": ["observable"], "properties": {
            "observable": _MATRIX, "theta0": _THETA,
            "lr": {"type": "number", "exclusiveMinimum": 0},
            "iters": {"type": "integer", "minimum": 0}}},
        "agent": {"type": "object", "properties": {
            "episodes": {"type": "integer", "minimum": 0},
            "lr": {"type": "number", "exclusiveMinimum": 0},
            "batch": {"type": "integer", "minimum": 1},
            "fd_h": {"type": "number", "exclusiveMinimum": 0},
            "theta0": _THETA}},
        "bench": {"type": "object", "properties": {
            "n_eval_episodes": {"type": "integer", "minimum": 1},
            "classical_epsilon": {"type": "number", "minimum": 0, "maximum": 1}}},
        "noncomm": {"type": "object", "properties": {
            "cap": {"type": "integer", "minimum": 1}}},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "qlearn"}}}, "then": {"required": ["env", "learner"]}},
        {"if": {"properties": {"kind": {"const": "value_iter"}}}, "then": {"required": ["env"]}},
        {"if": {"properties": {"kind": {"const": "pqc_opt"}}}, "then": {"required": ["template", "pqc"]}},
        {"if": {"properties": {"kind": {"const": "pqc_agent"}}}, "then": {"required": ["env", "template", "agent"]}},
        {"if": {"properties": {"kind": {"const": "advantage"}}},
         "then": {"required": ["env", "template", "learner", "agent", "bench"]}},
        {"if": {"properties": {"kind": {"const": "noncomm"}}}, "then": {"required": ["env"]}},
    ],
}


class ConfigError(ValueError):
    """Config failed validation; ``path`` locates the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(message)
        self.path = path

    def to_json(self) -> dict:
        return {"error": "config", "path": self.path, "message": str(self)}


def _field_path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        # "'gamma' is a required property": point at the missing field itself
        missing = err.message.split("'")[1] if "'" in err.message else ""
        parts.append(missing)
    return ".".join(p for p in parts if p) or "$"


def validate(cfg: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(cfg))
    if err is not None:
        raise ConfigError(err.message, _field_path(err))


def load(path: str | Path, seed: int | None = None, out_dir: str | None = None) -> dict:
    """Read, resolve and validate a config file; CLI overrides win."""
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}", "$") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object", "$")
    cfg = copy.deepcopy(cfg)
    if seed is not None:
        cfg["seed"] = seed
    if out_dir is not None:
        cfg["out_dir"] = out_dir
    if isinstance(cfg.get("env"), str):
        env_path = (path.parent / cfg["env"]).resolve()
        try:
            cfg["env"] = json.loads(env_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read env file: {exc}", "env") from exc
    validate(cfg)
    return cfg


def config_hash(cfg: dict) -> str:
    """Hash of the config minus ``out_dir``, stable under a manifest round trip."""
    canon = {k: v for k, v in cfg.items() if k != "out_dir"}
    # same serializer as the manifest, so 0.0 and 0 hash alike
    return hashlib.sha256(records.dumps(canon).encode()).hexdigest()


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    out_dir: str
    raw: dict

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        validate(cfg)
        return cls(cfg["kind"], int(cfg["seed"]), cfg["out_dir"], cfg)
