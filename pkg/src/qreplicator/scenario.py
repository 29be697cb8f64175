"""Scenario files: a JSON document describing one batch run.

Example::

    {
      "game": [[-1, 2], [0, 1]],
      "initial": [0.9, 0.1],
      "integrator": {"method": "rk4", "dt": 0.001, "t_end": 10, "renormalize": true},
      "analyses": ["vector", "lax"],
      "output": {"directory": "out", "format": "csv"}
    }

``tolerances`` may override any key of :data:`DEFAULT_TOLERANCES`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from qreplicator.game import as_payoff, as_strategy
from qreplicator.integrate import METHODS, IntegratorConfig
from qreplicator.replicator import MAX_SUPPORT_N

ANALYSES = ("vector", "lax", "quantum-self-consistent", "entropy-series", "equilibria")
FORMATS = ("csv", "json")

DEFAULT_TOLERANCES = {
    "simplex_drift": 1e-6,
    "trace_drift": 1e-8,
    "idempotency_drift": 1e-6,
    "diag_vs_vector": 1e-5,
    "correspondence": 1e-5,
    "hermiticity": 1e-12,
    "purity_drift": 1e-7,
    "min_eigenvalue": -1e-10,
}

SCHEMA = {
    "type": "object",
    "required": ["game", "initial", "analyses"],
    "additionalProperties": False,
    "properties": {
        "game": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        },
        "initial": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": list(METHODS)},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "renormalize": {"type": "boolean"},
            },
        },
        "analyses": {"type": "array", "items": {"enum": list(ANALYSES)}, "uniqueItems": True},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string", "minLength": 1},
                "format": {"enum": list(FORMATS)},
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number"} for k in DEFAULT_TOLERANCES},
        },
    },
}


class ScenarioError(ValueError):
    """Schema or semantic violation; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class Scenario:
    game: np.ndarray
    initial: np.ndarray
    integrator: IntegratorConfig
    analyses: tuple[str, ...]
    output_dir: str = "output"
    output_format: str = "csv"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def to_dict(self) -> dict:
        return {
            "game": self.game.tolist(),
            "initial": self.initial.tolist(),
            "integrator": self.integrator.as_dict(),
            "analyses": list(self.analyses),
            "output": {"directory": self.output_dir, "format": self.output_format},
            "tolerances": dict(self.tolerances),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


def _path(parts) -> str:
    return ".".join(str(p) for p in parts) or "<root>"


def parse_scenario(doc) -> Scenario:
    """Validate a decoded scenario document.

    Raises:
        ScenarioError: with the dotted path of the first offending field.
    """
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ScenarioError(_path(err.absolute_path), err.message)

    try:
        game = as_payoff(doc["game"])
    except ValueError as exc:
        raise ScenarioError("game", str(exc)) from None
    try:
        initial = as_strategy(doc["initial"], game.shape[0])
    except ValueError as exc:
        raise ScenarioError("initial", str(exc)) from None
    try:
        integrator = IntegratorConfig(**doc.get("integrator", {}))
    except ValueError as exc:
        raise ScenarioError("integrator", str(exc)) from None

    analyses = tuple(doc["analyses"])
    if "equilibria" in analyses and game.shape[0] > MAX_SUPPORT_N:
        raise ScenarioError("analyses", f"equilibria analysis supports at most {MAX_SUPPORT_N} strategies")

    out = doc.get("output", {})
    tolerances = dict(DEFAULT_TOLERANCES)
    tolerances.update(doc.get("tolerances", {}))
    return Scenario(
        game=game,
        initial=initial,
        integrator=integrator,
        analyses=analyses,
        output_dir=out.get("directory", "output"),
        output_format=out.get("format", "csv"),
        tolerances=tolerances,
    )


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file.

    Raises:
        ScenarioError: unreadable file, invalid JSON, or schema violation.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ScenarioError("<file>", str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ScenarioError("<file>", f"invalid JSON: {exc}") from None
    return parse_scenario(doc)
