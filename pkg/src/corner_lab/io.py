"""Text and JSON formats for sets, configurations, partitions and trajectories."""

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from .errors import ParseError
from .gf2 import ELEMENT_DTYPE, AffineSubspace, Configuration, make_subspace


def hex_width(n: int) -> int:
    return max(1, -(-n // 4))


def set_to_text(elements, n: int) -> str:
    """Header ``n=<n>`` then one fixed-width hex code per line, ascending."""
    w = hex_width(n)
    lines = [f"n={n}"] + [format(int(e), f"0{w}x") for e in sorted(int(e) for e in elements)]
    return "\n".join(lines) + "\n"


def set_from_text(text: str) -> tuple[int, np.ndarray]:
    lines = [ln.strip() for ln in text.splitlines()]
    if not lines or not lines[0].startswith("n="):
        raise ParseError("line 1: expected header 'n=<ambient-dim>'")
    try:
        n = int(lines[0][2:])
    except ValueError:
        raise ParseError(f"line 1: bad dimension {lines[0][2:]!r}") from None
    out = []
    for i, ln in enumerate(lines[1:], start=2):
        if not ln:
            continue
        try:
            v = int(ln, 16)
        except ValueError:
            raise ParseError(f"line {i}: not a hex code: {ln!r}") from None
        if v >> n:
            raise ParseError(f"line {i}: element {ln} wider than n={n} bits")
        out.append(v)
    return n, np.asarray(sorted(set(out)), dtype=ELEMENT_DTYPE)


def subspace_to_dict(V: AffineSubspace) -> dict:
    return {"basis": [int(b) for b in V.basis], "translate": int(V.translate)}


def subspace_from_dict(d: dict, n: int) -> AffineSubspace:
    return make_subspace(d.get("basis", []), d.get("translate", 0), n)


def config_to_dict(cfg: Configuration) -> dict:
    return {
        "n": cfg.n,
        "H": subspace_to_dict(cfg.H),
        "X": [int(v) for v in cfg.X],
        "Y": [int(v) for v in cfg.Y],
        "D": [int(v) for v in cfg.D],
        "A": [[int(a), int(b)] for a, b in cfg.A],
    }


def config_from_dict(d: dict) -> Configuration:
    missing = [k for k in ("n", "H", "X", "Y", "D", "A") if k not in d]
    if missing:
        raise ParseError(f"configuration lacks field(s): {', '.join(missing)}")
    n = int(d["n"])
    A = np.asarray(d["A"], dtype=ELEMENT_DTYPE).reshape(-1, 2)
    return Configuration(n, subspace_from_dict(d["H"], n), d["X"], d["Y"], d["D"], A)


def load_json(text: str, what: str = "document"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{what}: line {e.lineno} column {e.colno}: {e.msg}") from None


def config_to_json(cfg: Configuration) -> str:
    return json.dumps(config_to_dict(cfg), separators=(",", ":"))


def config_from_json(text: str) -> Configuration:
    return config_from_dict(load_json(text, "configuration"))


def plain(x):
    """Convert numpy scalars, arrays, fractions and tuples into JSON-ready values."""
    if isinstance(x, dict):
        return {str(k): plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return x


def dumps(obj) -> str:
    return json.dumps(plain(obj), indent=1)
