"""The von Neumann test and the density-increment search.

All routines take a configuration in fresh coordinates (:class:`LocalView`,
or a :class:`Configuration` which is localized first).  A search runs in one
coordinate system at a time: the lattice and A are re-indexed so the system's
two refined coordinates play the roles of X and Y, the pipeline runs, and the
resulting sets are mapped back.  Every candidate is recounted exactly before
it is returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NoIncrementFound, OutOfRange, PreconditionNotMet, ZeroDensity
from .gf2 import Configuration, LocalView
from .norms import SYSTEMS, Lattice, balanced_function, box_norms, lattice_of, to_system


# which original coordinate plays X, Y, D inside each system
_ROLES = {"XY": ("X", "Y", "D"), "XD": ("X", "D", "Y"), "YD": ("Y", "D", "X")}


@dataclass(frozen=True)
class GvnParams:
    C: float = 16.0
    kappa: float = 0.125
    kappa_prime: float | None = None
    c: float = 0.125

    def __post_init__(self):
        if self.kappa_prime is None:
            object.__setattr__(self, "kappa_prime", self.kappa ** 4 / 100)
        if not self.C > 0:
            raise ValueError("C must be positive")
        for name in ("kappa", "kappa_prime", "c"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")


@dataclass(frozen=True)
class GvnVerdict:
    outcome: str  # CornerGuaranteed | BoxNormLarge | TooSparse
    system: str | None
    witness: float
    norms: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class IncrementResult:
    """A sublattice X' x Y' cap X' x_diag D' with its exact density."""

    X: np.ndarray
    Y: np.ndarray
    D: np.ndarray
    whole: tuple[str, ...]
    delta_before: Fraction
    delta_after: Fraction
    route: str
    system: str
    attempts: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    @property
    def lattice(self) -> Lattice:
        return Lattice(self.X, self.Y, self.D)

    @property
    def gain(self) -> Fraction:
        return self.delta_after - self.delta_before


def _local(cfg) -> LocalView:
    return cfg.local() if isinstance(cfg, Configuration) else cfg


def _delta(A: np.ndarray, L: Lattice) -> Fraction:
    if L.size == 0:
        return Fraction(0)
    return Fraction(int(np.count_nonzero(A & L.S)), L.size)


def gvn_check(cfg, p: GvnParams = GvnParams()) -> GvnVerdict:
    """Decide between a guaranteed corner, a large box norm and too little mass."""
    v = _local(cfg)
    L = lattice_of(v)
    if L.size == 0:
        return GvnVerdict("TooSparse", None, 0.0)
    delta = float(_delta(v.A, L))
    mass = L.dX * L.dY * L.dD * delta ** 2 * v.N
    if mass <= p.C:
        return GvnVerdict("TooSparse", None, mass)
    norms = box_norms(balanced_function(v.A, L), L)
    worst = max(SYSTEMS, key=lambda s: norms[s])
    if norms[worst] > p.kappa * delta ** 1.25:
        return GvnVerdict("BoxNormLarge", worst, norms[worst], norms)
    return GvnVerdict("CornerGuaranteed", None, max(norms.values()), norms)


def pz_select(values, p: float) -> tuple[np.ndarray, float]:
    """Indices with value > sigma^p / 5, where sigma^p = E|Z|^p.

    The values must lie in [-1, 1] and average to zero (within 1e-9).
    """
    z = np.asarray(values, dtype=np.float64)
    if z.size == 0:
        return np.zeros(0, dtype=np.int64), 0.0
    if np.any(np.abs(z) > 1 + 1e-12):
        raise OutOfRange("values must lie in [-1, 1]")
    if abs(float(z.mean())) > 1e-9:
        raise OutOfRange(f"values must have mean zero, got {z.mean():.3g}")
    sigma_p = float(np.mean(np.abs(z) ** p))
    return np.flatnonzero(z > sigma_p / 5), sigma_p


class _System:
    """The configuration re-indexed so that a given system reads as (X, Y, D)."""

    def __init__(self, v: LocalView, system: str):
        self.system = system
        self.L = lattice_of(v).relabel(system)
        self.A = to_system(v.A, system)
        self.delta = _delta(self.A, self.L)
        self.f = balanced_function(self.A, self.L)

    def row_means(self, rows=None, cols=None) -> np.ndarray:
        """E_{y in cols} f(x, y) for x in rows."""
        rows = self.L.X if rows is None else rows
        cols = self.L.Y if cols is None else cols
        return self.f[np.ix_(rows, cols)].mean(axis=1)

    def col_means(self, rows=None, cols=None) -> np.ndarray:
        rows = self.L.X if rows is None else rows
        cols = self.L.Y if cols is None else cols
        return self.f[np.ix_(rows, cols)].mean(axis=0)

    def subset(self, base: np.ndarray, picked) -> np.ndarray:
        out = np.zeros_like(base)
        out[np.flatnonzero(base)[picked]] = True
        return out

    def candidate(self, Xs, Ys, Ds, route: str, diagnostics=None) -> "_Candidate":
        sub = Lattice(Xs, Ys, Ds)
        return _Candidate(self, sub, _delta(self.A, sub), route, diagnostics or {})


@dataclass
class _Candidate:
    sys: _System
    sub: Lattice
    delta: Fraction
    route: str
    diagnostics: dict

    def failures(self, kappa_prime: float) -> list[str]:
        L, sub = self.sys.L, self.sub
        kp = Fraction(kappa_prime)
        d0 = self.sys.delta
        bad = []
        if sub.size == 0:
            return ["empty sublattice"]
        if self.delta < d0 + kp * d0 * d0:
            bad.append(f"density {float(self.delta):.6g} below {float(d0 + kp * d0 * d0):.6g}")
        for name in "XYD":
            r = Fraction(int(getattr(sub, name).sum()), int(getattr(L, name).sum()))
            if r < kp * d0 * d0:
                bad.append(f"P({name}'|{name}) = {float(r):.3g} too small")
        if not any(np.array_equal(getattr(sub, n), getattr(L, n)) for n in "XYD"):
            bad.append("all three coordinates refined")
        return bad

    def result(self, attempts) -> IncrementResult:
        sets = dict(zip(_ROLES[self.sys.system], (self.sub.X, self.sub.Y, self.sub.D)))
        X, Y, D = sets["X"], sets["Y"], sets["D"]
        orig = _ROLES[self.sys.system]
        whole = tuple(sorted(orig[i] for i, n in enumerate("XYD")
                             if np.array_equal(getattr(self.sub, n), getattr(self.sys.L, n))))
        return IncrementResult(X, Y, D, whole, self.sys.delta, self.delta, self.route,
                               self.sys.system, tuple(attempts), dict(self.diagnostics))


def _fiber_scale(Z: np.ndarray, dD: float) -> float:
    # the natural bound is 2 delta_D; fibers beyond it are rare under uniformity,
    # so rescale by the observed maximum instead of discarding them
    return max(2 * dD, float(np.abs(Z).max(initial=0.0)))


def _fiber_candidate(s: _System, c: float, side: str) -> _Candidate:
    L = s.L
    Z = s.row_means() if side == "X" else s.col_means()
    if Z.size == 0:
        raise PreconditionNotMet("empty coordinate set")
    d = float(s.delta)
    energy = float(np.mean(Z ** 2))
    if energy < c * d * d * L.dD ** 2 or energy == 0:
        raise PreconditionNotMet(f"fiber energy {energy:.3g} below c delta^2 delta_D^2")
    M = _fiber_scale(Z, L.dD)
    picked, sigma_p = pz_select(Z / M, 2)
    if picked.size == 0:
        raise PreconditionNotMet("empty Paley-Zygmund selection")
    diag = {"fiber_energy": energy, "scale": M, "sigma_p": sigma_p,
            "mass_beyond_2dD": float(np.mean(np.abs(Z) > 2 * L.dD))}
    if side == "X":
        return s.candidate(s.subset(L.X, picked), L.Y, L.D, "fiber_X", diag)
    return s.candidate(L.X, s.subset(L.Y, picked), L.D, "fiber_Y", diag)


def fiber_increment(cfg, c: float, side: str = "X", system: str = "XY") -> IncrementResult:
    """Refine one coordinate to the fibers whose mean of f is large and positive."""
    return _fiber_candidate(_System(_local(cfg), system), c, side).result(())


def _low_density_candidate(s: _System, Xpp, Ypp, lam: float, tau: float) -> _Candidate:
    L = s.L
    if lam <= 0:
        raise PreconditionNotMet("lambda must be positive")
    pX = Fraction(int(Xpp.sum()), int(L.X.sum()))
    pY = Fraction(int(Ypp.sum()), int(L.Y.sum()))
    if pX < 1 - Fraction(lam) or pY < 1 - Fraction(lam):
        raise PreconditionNotMet("X'' or Y'' smaller than 1 - lambda")
    inner = Lattice(Xpp, Ypp, L.D)
    if inner.size == 0 or inner.size == L.size:
        raise PreconditionNotMet("S'' must be a nonempty proper part of S")
    if _delta(s.A, inner) > s.delta - Fraction(tau) or tau <= 0:
        raise PreconditionNotMet("density on S'' is not below delta - tau")
    Xc, Yc = L.X & ~Xpp, L.Y & ~Ypp
    pieces = [(Xc, Yc), (Xc, Ypp), (Xpp, Yc)]
    best = None
    for Xs, Ys in pieces:
        cand = s.candidate(Xs, Ys, L.D, "low_density")
        if cand.sub.size and (best is None or cand.delta > best.delta):
            best = cand
    p = Fraction(inner.size, L.size)
    outside = Fraction(int(np.count_nonzero(s.A)) - int(np.count_nonzero(s.A & inner.S)),
                       L.size - inner.size)
    best.diagnostics.update({"P(S''|S)": float(p), "density_outside": float(outside),
                             "mixture_bound": float(s.delta + Fraction(tau) * p / (1 - p))})
    return best


def low_density_increment(cfg, Xpp, Ypp, lam: float, tau: float,
                          system: str = "XY") -> IncrementResult:
    """Densest of the three sublattices making up S - S'', S'' = X'' x Y'' cap D."""
    s = _System(_local(cfg), system)
    return _low_density_candidate(s, np.asarray(Xpp, bool), np.asarray(Ypp, bool), lam, tau).result(())


def delta_statistic(s_f: np.ndarray, Xs: np.ndarray, Ys: np.ndarray) -> float:
    """E_{x,y} f(x,y) E_{x'} f(x',y) E_{y'} f(x,y') over Xs x Ys."""
    F = s_f[np.ix_(Xs, Ys)]
    if F.size == 0:
        return 0.0
    return float(np.mean(F * F.mean(axis=0)[None, :] * F.mean(axis=1)[:, None]))


def _delta_candidates(s: _System, c: float) -> list[_Candidate]:
    L = s.L
    d, dD = float(s.delta), L.dD
    stat = delta_statistic(s.f, L.X, L.Y)
    if abs(stat) < c * d ** 3 * dD ** 3 or stat == 0:
        raise PreconditionNotMet(f"|Delta statistic| {abs(stat):.3g} below c delta^3 delta_D^3")
    rows, cols = s.row_means(), s.col_means()
    hx = float(np.mean(np.abs(rows) ** 1.5))
    hy = float(np.mean(np.abs(cols) ** 1.5))
    c2 = (c / 2) ** 0.75
    diag = {"delta_statistic": stat, "holder_x": hx, "holder_y": hy,
            "holder_threshold": c2 * d * d * dD ** 1.5}
    px, _ = pz_select(rows / _fiber_scale(rows, dD), 1.5)
    py, _ = pz_select(cols / _fiber_scale(cols, dD), 1.5)
    Xs, Ys = s.subset(L.X, px), s.subset(L.Y, py)
    sides = [("Y", L.X, Ys), ("X", Xs, L.Y)]
    if hx > hy:
        sides.reverse()
    out = []
    for _, a, b in sides:
        if a.any() and b.any():
            out.append(s.candidate(a, b, L.D, "delta", diag))
    if px.size and py.size:
        out.append(s.candidate(Xs, Ys, L.D, "delta", diag))
    if not out:
        raise PreconditionNotMet("empty Paley-Zygmund selection")
    return out


def delta_increment(cfg, c: float, system: str = "XY",
                    kappa_prime: float = GvnParams().kappa_prime) -> IncrementResult:
    """The Hölder route: select by p = 3/2 moments of the fiber means."""
    s = _System(_local(cfg), system)
    cands = _delta_candidates(s, c)
    good = [x for x in cands if not x.failures(kappa_prime)]
    best = max(good or cands, key=lambda x: x.delta)
    return best.result(())


def neighbor_filters(s: _System, kappa: float) -> tuple[np.ndarray, np.ndarray]:
    """X'' and Y'': enough neighbors in A and a fiber mean of f below kappa delta delta_D."""
    L = s.L
    d, dD = float(s.delta), L.dD
    nX = s.A.sum(axis=1) / max(int(L.Y.sum()), 1)
    nY = s.A.sum(axis=0) / max(int(L.X.sum()), 1)
    rX = np.zeros(L.N)
    rY = np.zeros(L.N)
    rX[L.X] = s.row_means()
    rY[L.Y] = s.col_means()
    Xpp = L.X & (nX >= kappa * d ** 5 * dD) & (np.abs(rX) < kappa * d * dD)
    Ypp = L.Y & (nY >= kappa * d ** 5 * dD) & (np.abs(rY) < kappa * d * dD)
    return Xpp, Ypp


def scan_candidate(s: _System, Xpp: np.ndarray, Ypp: np.ndarray) -> _Candidate:
    """Best N_y x N_x cap S'' over (x, y) in A cap X'' x Y''; first maximizer wins."""
    B = s.A[np.ix_(Xpp, Ypp)].astype(np.float32)
    Spp = Lattice(Xpp, Ypp, s.L.D).S[np.ix_(Xpp, Ypp)].astype(np.float32)
    if not B.any():
        raise PreconditionNotMet("A has no point in X'' x Y''")
    num = ((B @ B.T) @ B).astype(np.int64)
    den = ((B @ Spp.T) @ B).astype(np.int64)
    ok = (B > 0) & (den > 0)
    ratio = np.where(ok, num / np.maximum(den, 1), -1.0)
    i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    xi, yj = np.flatnonzero(Xpp)[i], np.flatnonzero(Ypp)[j]
    Xs = Xpp & s.A[:, yj]  # N_y cap X''
    Ys = Ypp & s.A[xi, :]  # N_x cap Y''
    return s.candidate(Xs, Ys, s.L.D, "scan", {"pair": (int(xi), int(yj)),
                                               "ratio": float(ratio[i, j])})


def _pipeline(s: _System, p: GvnParams, attempts: list) -> _Candidate | None:
    """Run the routes in order; return the first candidate that passes recount."""
    L = s.L
    d, dD = float(s.delta), L.dD
    k = p.kappa
    tried: set[str] = set()

    def attempt(name, make):
        tried.add(name)
        try:
            cands = make()
        except PreconditionNotMet as e:
            attempts.append((s.system, name, f"precondition: {e}"))
            return None
        if not isinstance(cands, list):
            cands = [cands]
        for cand in cands:
            bad = cand.failures(p.kappa_prime)
            if not bad:
                attempts.append((s.system, name, "ok"))
                return cand
        attempts.append((s.system, name, "recount failed: " + "; ".join(bad)))
        return None

    diag: dict = {}
    ex = float(np.mean(s.row_means() ** 2)) if L.X.any() else 0.0
    ey = float(np.mean(s.col_means() ** 2)) if L.Y.any() else 0.0
    fib = k ** 3 * d * d * dD * dD
    diag.update(fiber_energy_X=ex, fiber_energy_Y=ey)
    order = []
    if ex > fib:
        order.append(("fiber_X", lambda: _fiber_candidate(s, k ** 3, "X")))
    if ey > fib:
        order.append(("fiber_Y", lambda: _fiber_candidate(s, k ** 3, "Y")))
    for name, make in order:
        cand = attempt(name, make)
        if cand is not None:
            return cand

    Xpp, Ypp = neighbor_filters(s, k)
    diag.update({"P(X''|X)": float(Xpp.sum() / max(L.X.sum(), 1)),
                 "P(Y''|Y)": float(Ypp.sum() / max(L.Y.sum(), 1))})
    if Xpp.any() and Ypp.any():
        F = s.f[np.ix_(Xpp, Ypp)]
        mean = float(F.mean())
        rX = F.mean(axis=1)
        rY = F.mean(axis=0)
        Delta = dD * delta_statistic(s.f, Xpp, Ypp)
        diag.update(mean_f_on_XppYpp=mean, Delta=Delta,
                    alpha_X_sq=d * dD ** 2 * float(np.mean(rX ** 2)),
                    alpha_Y_sq=d * dD ** 2 * float(np.mean(rY ** 2)))
        steps = []
        if mean >= k * d * d * dD:
            steps.append(("direct", lambda: s.candidate(Xpp, Ypp, L.D, "direct")))
        elif mean <= -k * d ** 4 * dD:
            lam = max(1 - Xpp.sum() / L.X.sum(), 1 - Ypp.sum() / L.Y.sum())
            tau = float(s.delta - _delta(s.A, Lattice(Xpp, Ypp, L.D)))
            steps.append(("low_density", lambda: _low_density_candidate(s, Xpp, Ypp, lam, tau)))
        elif abs(Delta) > k * d ** 3 * dD ** 4:
            steps.append(("delta", lambda: _delta_candidates(s, k)))
        steps.append(("scan", lambda: scan_candidate(s, Xpp, Ypp)))
        for name, make in steps:
            cand = attempt(name, make)
            if cand is not None:
                cand.diagnostics.update(diag)
                return cand

    # fall back to the remaining routes before giving up
    fallbacks = [
        ("fiber_X", lambda: _fiber_candidate(s, k ** 3, "X")),
        ("fiber_Y", lambda: _fiber_candidate(s, k ** 3, "Y")),
        ("delta", lambda: _delta_candidates(s, k)),
    ]
    if Xpp.any() and Ypp.any() and "scan" not in tried:
        fallbacks.append(("scan", lambda: scan_candidate(s, Xpp, Ypp)))
    for name, make in fallbacks:
        if name in tried:
            continue
        cand = attempt(name, make)
        if cand is not None:
            cand.diagnostics.update(diag)
            return cand
    return None


def density_increment(cfg, p: GvnParams = GvnParams()) -> IncrementResult:
    """Find a sublattice with density at least delta + kappa' delta^2.

    Runs in the system with the largest box norm; if every route there fails
    the exact recount, the other systems are tried before NoIncrementFound.
    """
    v = _local(cfg)
    L = lattice_of(v)
    if L.size == 0:
        raise ZeroDensity("S is empty")
    norms = box_norms(balanced_function(v.A, L), L)
    delta = float(_delta(v.A, L))
    worst = max(SYSTEMS, key=lambda s: norms[s])
    if norms[worst] <= p.kappa * delta ** 1.25:
        raise PreconditionNotMet("all box norms are below kappa delta^(5/4)")
    order = sorted(SYSTEMS, key=lambda s: (-norms[s], SYSTEMS.index(s)))
    attempts: list = []
    for system in order:
        cand = _pipeline(_System(v, system), p, attempts)
        if cand is not None:
            cand.diagnostics["box_norms"] = norms
            return cand.result(attempts)
    raise NoIncrementFound("no route produced a verified increment: "
                           + "; ".join(f"{a}/{b}: {c}" for a, b, c in attempts))


def verify_increment(cfg, res: IncrementResult, kappa_prime: float) -> list[str]:
    """Independent recount of the three conclusions in the original coordinates."""
    v = _local(cfg)
    L = lattice_of(v)
    sub = res.lattice
    d0 = _delta(v.A, L)
    kp = Fraction(kappa_prime)
    bad = []
    if np.any(sub.X & ~L.X) or np.any(sub.Y & ~L.Y) or np.any(sub.D & ~L.D):
        bad.append("refined sets are not subsets")
    if sub.size == 0:
        return bad + ["empty sublattice"]
    d1 = Fraction(int(np.count_nonzero(v.A & sub.S)), sub.size)
    if d1 != res.delta_after:
        bad.append("reported density disagrees with recount")
    if d1 < d0 + kp * d0 * d0:
        bad.append("density increment too small")
    for n in "XYD":
        if Fraction(int(getattr(sub, n).sum()), int(getattr(L, n).sum())) < kp * d0 * d0:
            bad.append(f"{n}' too small")
    if not any(np.array_equal(getattr(sub, n), getattr(L, n)) for n in "XYD"):
        bad.append("no coordinate left whole")
    return bad
