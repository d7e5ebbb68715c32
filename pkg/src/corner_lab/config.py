"""Run configuration: JSON parsing, defaults and range validation."""

from __future__ import annotations

import json
from dataclasses import dataclass

import jsonschema

from .driver import INSTANCE_KINDS, DriverParams
from .errors import ParseError, ValidationError
from .gf2 import CUBIC_DIM_CAP, MAX_AMBIENT_DIM
from .increment import GvnParams

_OPEN_UNIT = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n": {"type": "integer", "minimum": 0, "maximum": MAX_AMBIENT_DIM},
        "seed": {"type": "integer", "minimum": 0},
        "instance": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(INSTANCE_KINDS)},
                "p": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        "constants": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "C": {"type": "number", "exclusiveMinimum": 0},
                "kappa": _OPEN_UNIT,
                "kappa_prime": _OPEN_UNIT,
                "c": _OPEN_UNIT,
                "upsilon_exponent": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "caps": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_dim_cubic": {"type": "integer", "minimum": 0, "maximum": MAX_AMBIENT_DIM},
                "max_steps": {"type": "integer", "minimum": 1},
            },
        },
    },
}


@dataclass(frozen=True)
class RunConfig:
    n: int = 5
    seed: int = 0
    kind: str = "random"
    p: float = 0.9
    C: float = 16.0
    kappa: float = 0.125
    kappa_prime: float | None = None
    c: float = 0.125
    upsilon_exponent: float = 1.0
    max_dim_cubic: int = CUBIC_DIM_CAP
    max_steps: int = 1000

    @property
    def resolved_kappa_prime(self) -> float:
        return self.kappa ** 4 / 100 if self.kappa_prime is None else self.kappa_prime

    def params(self) -> DriverParams:
        gvn = GvnParams(self.C, self.kappa, self.resolved_kappa_prime, self.c)
        return DriverParams(gvn, self.upsilon_exponent, self.max_steps)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed,
            "instance": {"kind": self.kind, "p": self.p},
            "constants": {"C": self.C, "kappa": self.kappa, "kappa_prime": self.resolved_kappa_prime,
                          "c": self.c, "upsilon_exponent": self.upsilon_exponent},
            "caps": {"max_dim_cubic": self.max_dim_cubic, "max_steps": self.max_steps},
        }


def _where(err: jsonschema.ValidationError) -> str:
    path = "/".join(str(p) for p in err.absolute_path)
    return path or "<root>"


def validate(doc) -> None:
    """Raise ValidationError listing every schema violation."""
    v = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(v.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        raise ValidationError([f"{_where(e)}: {e.message}" for e in errors])


def config_from_doc(doc: dict) -> RunConfig:
    validate(doc)
    inst = doc.get("instance", {})
    const = doc.get("constants", {})
    caps = doc.get("caps", {})
    defaults = RunConfig()
    return RunConfig(
        n=doc.get("n", defaults.n),
        seed=doc.get("seed", defaults.seed),
        kind=inst.get("kind", defaults.kind),
        p=float(inst.get("p", defaults.p)),
        C=float(const.get("C", defaults.C)),
        kappa=float(const.get("kappa", defaults.kappa)),
        kappa_prime=float(const["kappa_prime"]) if "kappa_prime" in const else None,
        c=float(const.get("c", defaults.c)),
        upsilon_exponent=float(const.get("upsilon_exponent", defaults.upsilon_exponent)),
        max_dim_cubic=caps.get("max_dim_cubic", defaults.max_dim_cubic),
        max_steps=caps.get("max_steps", defaults.max_steps),
    )


def parse_config(text: str) -> RunConfig:
    """Parse a JSON run configuration; missing fields take their defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
    return config_from_doc(doc)
