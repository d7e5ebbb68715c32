"""The iteration loop, instance generation and exhaustive small-case search.

The loop keeps its configuration over a fresh full space F_2^k: after each
uniformization the sets are jointly translated onto a linear subspace H0 and
re-expressed in H0's basis.
"""

from __future__ import annotations

import csv
import io as _io
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DimensionExhausted, PropertyViolation, TooLarge
from .fourier import uniformity_norm
from .gf2 import (
    ELEMENT_DTYPE,
    Configuration,
    full_space,
    parity_array,
    recode_to_subspace,
    translate_configuration,
)
from .increment import GvnParams, IncrementResult, density_increment, gvn_check
from .io import config_from_dict, config_to_dict, plain
from .norms import count_corners, lattice_of
from .uniformize import uniformize_sublattice

DENSE_PAIR_MAX_DIM = 12
GREEDY_MAX_DIM = 8
BRUTE_FORCE_PAIR_CAP = 24


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox stream keyed by the seed."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


@dataclass(frozen=True)
class DriverParams:
    gvn: GvnParams = field(default_factory=GvnParams)
    upsilon_exponent: float = 1.0
    max_steps: int = 1000
    brute_force_dim: int = 6
    min_dim: int = 1


@dataclass
class IterationState:
    step: int
    action: str  # Start | Increment | Uniformize | Terminate
    config: Configuration
    delta: Fraction
    delta_X: float
    delta_Y: float
    delta_D: float
    detail: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.config.dim

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "action": self.action,
            "delta": float(self.delta),
            "delta_exact": f"{self.delta.numerator}/{self.delta.denominator}",
            "delta_X": self.delta_X,
            "delta_Y": self.delta_Y,
            "delta_D": self.delta_D,
            "dimH": self.dim,
            "detail": plain(self.detail),
            "config": config_to_dict(self.config),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IterationState":
        return cls(d["step"], d["action"], config_from_dict(d["config"]),
                   Fraction(d["delta_exact"]), d["delta_X"], d["delta_Y"], d["delta_D"],
                   d.get("detail", {}))


@dataclass
class Trajectory:
    """State snapshots plus the verdict.

    Serialized as a JSON array of state records: the run parameters ride in the
    Start record's detail and the verdict and stop reason in the Terminate record's.
    """

    states: list
    verdict: str  # CornerCertified | CornerFoundByBruteForce | TooSparse | DimensionExhausted | MaxStepsExceeded
    stop_reason: str
    params: dict = field(default_factory=dict)

    def increments(self) -> list:
        return [s for s in self.states if s.action == "Increment"]

    def to_records(self) -> list:
        return [s.to_dict() for s in self.states]

    def to_json(self) -> str:
        return json.dumps(self.to_records(), indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Trajectory":
        states = [IterationState.from_dict(s) for s in json.loads(text)]
        first, last = states[0].detail, states[-1].detail
        return cls(states, last["verdict"], last["stop_reason"], first.get("params", {}))

    def to_csv(self) -> str:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "action", "delta", "delta_X", "delta_Y", "delta_D", "dimH"])
        for s in self.states:
            w.writerow([s.step, s.action, repr(float(s.delta)), repr(s.delta_X),
                        repr(s.delta_Y), repr(s.delta_D), s.dim])
        return buf.getvalue()


def _state(step: int, action: str, cfg: Configuration, detail=None) -> IterationState:
    v = cfg.local()
    L = lattice_of(v)
    delta = Fraction(int(np.count_nonzero(v.A)), L.size) if L.size else Fraction(0)
    return IterationState(step, action, cfg, delta, L.dX, L.dY, L.dD, detail or {})


def _elements(mask: np.ndarray) -> np.ndarray:
    return np.flatnonzero(mask).astype(ELEMENT_DTYPE)


def _restricted_config(k: int, A: np.ndarray, X, Y, D) -> Configuration:
    """Configuration over F_2^k keeping the points of A inside X x Y cap X x_diag D."""
    S = X[:, None] & Y[None, :] & D[np.bitwise_xor.outer(np.arange(1 << k), np.arange(1 << k))]
    rows, cols = np.nonzero(A & S)
    pairs = np.stack([rows, cols], axis=1).astype(ELEMENT_DTYPE)
    return Configuration(k, full_space(k), _elements(X), _elements(Y), _elements(D), pairs)


def _is_uniform(masks, upsilon: float) -> tuple[bool, list]:
    norms = [uniformity_norm(m) for m in masks]
    return all(v <= upsilon for v in norms), norms


def _advance(cfg: Configuration, res: IncrementResult, params: DriverParams, step: int,
             states: list) -> Configuration:
    """Apply an increment and, when needed, the uniformization that follows it."""
    v = cfg.local()
    k = v.k
    after = _restricted_config(k, v.A, res.X, res.Y, res.D)
    states.append(_state(step, "Increment", after, {
        "route": res.route, "system": res.system, "whole": list(res.whole),
        "gain": float(res.gain)}))
    d = float(res.delta_after)
    ups = (d * res.X.mean() * res.Y.mean() * res.D.mean()) ** params.upsilon_exponent
    ok, norms = _is_uniform((res.X, res.Y, res.D), ups)
    if ok:
        return after
    H = full_space(k)
    out = uniformize_sublattice(H, v.X, v.Y, v.D, v.A, res.X, res.Y, res.D, ups,
                                kappa=params.gvn.kappa, C=params.gvn.C, min_dim=params.min_dim)
    sub = _restricted_config(k, v.A, out.X, out.Y, out.D)
    a, b = out.translation
    moved = translate_configuration(sub, a, b)
    recoded = recode_to_subspace(moved, out.H0)
    states.append(_state(step, "Uniformize", recoded, {
        "upsilon": ups, "uniformity_before": norms, "m": list(out.partition.m),
        "translation": [a, b], "dim_H0": out.H0.dim,
        "checks": {k_: v_ for k_, v_ in out.checks.items()}}))
    return recoded


def run_iteration(cfg0: Configuration, params: DriverParams = DriverParams()) -> Trajectory:
    """Alternate the von Neumann test, density increments and uniformization."""
    cfg = recode_to_subspace(cfg0, cfg0.H) if cfg0.H.translate or cfg0.H.dim != cfg0.n else cfg0
    pdict = {"C": params.gvn.C, "kappa": params.gvn.kappa, "kappa_prime": params.gvn.kappa_prime,
             "c": params.gvn.c, "upsilon_exponent": params.upsilon_exponent,
             "max_steps": params.max_steps}
    states = [_state(0, "Start", cfg, {"params": pdict})]

    def finish(verdict, reason, detail=None):
        detail = dict(detail or {})
        v = cfg.local()
        if verdict in ("TooSparse", "DimensionExhausted") and v.k <= params.brute_force_dim:
            detail["corners"] = count_corners(v.A)
            if detail["corners"] > 0:
                reason = f"{verdict}: {reason}; exhaustive search found a corner"
                verdict = "CornerFoundByBruteForce"
        detail["verdict"] = verdict
        detail["stop_reason"] = reason
        states.append(_state(states[-1].step, "Terminate", cfg, detail))
        return Trajectory(states, verdict, reason, pdict)

    for step in range(1, params.max_steps + 1):
        v = cfg.local()
        verdict = gvn_check(v, params.gvn)
        if verdict.outcome == "TooSparse":
            return finish("TooSparse", "mass condition failed", {"mass": verdict.witness})
        if verdict.outcome == "CornerGuaranteed":
            detail = {"norms": verdict.norms}
            if v.k <= params.brute_force_dim:
                detail["corners"] = count_corners(v.A)
                if detail["corners"] == 0:
                    raise PropertyViolation("certified configuration has no corner")
            return finish("CornerCertified", "box norms below threshold", detail)
        res = density_increment(v, params.gvn)
        try:
            cfg = _advance(cfg, res, params, step, states)
        except DimensionExhausted as e:
            cfg = states[-1].config  # the increment stands; only its uniformization failed
            return finish("DimensionExhausted", str(e))
    return finish("MaxStepsExceeded", f"no verdict after {params.max_steps} steps")


def _run_one(args) -> str:
    cfg_dict, params = args
    return run_iteration(config_from_dict(cfg_dict), params).to_json()


def run_many(configs, params: DriverParams = DriverParams(), jobs: int = 1) -> list[str]:
    """Trajectory JSON for each configuration; jobs > 1 uses worker processes."""
    work = [(config_to_dict(c), params) for c in configs]
    if jobs <= 1:
        return [_run_one(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_run_one, work))


# -- instances ---------------------------------------------------------------

INSTANCE_KINDS = ("random", "half-space", "product-of-hyperplanes", "corner-free-greedy")


def _hyperplane(rng: np.random.Generator, n: int) -> np.ndarray:
    xi = int(rng.integers(1, 1 << n))
    return parity_array(np.arange(1 << n, dtype=ELEMENT_DTYPE) & ELEMENT_DTYPE(xi)) == 0


def _adds_corner(A: np.ndarray, x: int, y: int, idx: np.ndarray) -> bool:
    """Would putting (x, y) into A complete a corner?"""
    d = idx[1:]
    # (x, y) as the corner point, as (x+d, y) and as (x, y+d)
    if np.any(A[x ^ d, y] & A[x, y ^ d]):
        return True
    if np.any(A[x ^ d, y] & A[x ^ d, y ^ d]):
        return True
    return bool(np.any(A[x, y ^ d] & A[x ^ d, y ^ d]))


def generate_instance(kind: str, n: int, seed: int, p: float = 0.5) -> Configuration:
    """A deterministic test configuration over F_2^n with X = Y = D = F_2^n.

    random: each pair independently with probability p.  half-space: A = X0 x H
    for a random hyperplane X0.  product-of-hyperplanes: A = X0 x Y0.
    corner-free-greedy: pairs in a random order, kept unless they complete a corner.
    """
    if kind not in INSTANCE_KINDS:
        raise ValueError(f"unknown instance kind {kind!r}")
    if n > DENSE_PAIR_MAX_DIM:
        raise TooLarge(f"dense instances limited to n <= {DENSE_PAIR_MAX_DIM}")
    rng = make_rng(seed)
    N = 1 << n
    if kind == "random":
        A = rng.random((N, N)) < p
    elif kind == "half-space":
        A = np.repeat(_hyperplane(rng, n)[:, None], N, axis=1) if n else np.ones((1, 1), bool)
    elif kind == "product-of-hyperplanes":
        if n == 0:
            A = np.ones((1, 1), bool)
        else:
            X0 = _hyperplane(rng, n)
            A = X0[:, None] & _hyperplane(rng, n)[None, :]
    else:
        if n > GREEDY_MAX_DIM:
            raise TooLarge(f"corner-free-greedy limited to n <= {GREEDY_MAX_DIM}")
        A = np.zeros((N, N), dtype=bool)
        idx = np.arange(N)
        for flat in rng.permutation(N * N):
            x, y = divmod(int(flat), N)
            if not _adds_corner(A, x, y, idx):
                A[x, y] = True
    rows, cols = np.nonzero(A)
    return Configuration.full(n, np.stack([rows, cols], axis=1).astype(ELEMENT_DTYPE))


# -- exhaustive search -------------------------------------------------------

def brute_force_max_corner_free(n: int) -> tuple[int, list[tuple[int, int]]]:
    """Largest corner-free subset of F_2^n x F_2^n, with a witness."""
    N = 1 << n
    if N * N > BRUTE_FORCE_PAIR_CAP:
        raise TooLarge(f"exhaustive search needs 4^n <= {BRUTE_FORCE_PAIR_CAP}")
    points = [(x, y) for x in range(N) for y in range(N)]
    if n <= 1:
        best: list = []
        for r in range(len(points), 0, -1):
            for combo in itertools.combinations(points, r):
                A = np.zeros((N, N), dtype=bool)
                for x, y in combo:
                    A[x, y] = True
                if count_corners(A) == 0:
                    return r, list(combo)
        return 0, best
    idx = np.arange(N)
    A = np.zeros((N, N), dtype=bool)
    best_set: list = []
    chosen: list = []

    def search(i: int):
        nonlocal best_set
        if len(chosen) + (len(points) - i) <= len(best_set):
            return
        if i == len(points):
            best_set = list(chosen)
            return
        x, y = points[i]
        if not _adds_corner(A, x, y, idx):
            A[x, y] = True
            chosen.append((x, y))
            search(i + 1)
            chosen.pop()
            A[x, y] = False
        search(i + 1)

    search(0)
    return len(best_set), best_set
