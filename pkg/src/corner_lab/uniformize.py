"""Energy-increment splitting and the partitions that restore uniformity.

Cells are affine subspaces of the home space; a subset U is restricted to a
cell V by reading its mask along V's enumeration, and the uniformity of U in V
is measured in V's own coordinates.  Mean-square densities are kept as exact
fractions so that monotonicity and per-round gains can be checked without
tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import AlreadyUniform, DimensionExhausted, NoGoodCell, PropertyViolation
from .fourier import max_character
from .gf2 import AffineSubspace, SubsetOfH, split_by_character, sum_subspaces
from .norms import Lattice


def _restrict(U: SubsetOfH, V: AffineSubspace) -> np.ndarray:
    """Mask of U cap V in V's enumeration (V inside U's home)."""
    return U.mask[U.home.coords(V.enumerate(), check=False)]


def _count(U: SubsetOfH, V: AffineSubspace) -> int:
    return int(np.count_nonzero(_restrict(U, V)))


def restricted_uniformity(U: SubsetOfH, V: AffineSubspace) -> float:
    return max_character(_restrict(U, V)).value


class EnergySplit(NamedTuple):
    first: AffineSubspace  # {x . eta = 0}
    second: AffineSubspace
    eta: int
    norm: float
    density: float
    density_first: float
    density_second: float

    @property
    def gain(self) -> float:
        return 0.5 * (self.density_first ** 2 + self.density_second ** 2) - self.density ** 2


def _split_cell(U: SubsetOfH, V: AffineSubspace):
    m = _restrict(U, V)
    uni = max_character(m)
    if uni.value == 0:
        raise AlreadyUniform("every nontrivial coefficient vanishes")
    eta = V.character_from_coefficients(uni.xi)
    V1, V2 = split_by_character(V, eta)
    return V1, V2, eta, uni.value


def energy_split(X: SubsetOfH, H: AffineSubspace | None = None) -> EnergySplit:
    """Split H along the character where X has its largest nontrivial coefficient."""
    H = X.home if H is None else H
    H1, H2, eta, norm = _split_cell(X, H)
    d = _count(X, H) / H.size
    d1, d2 = _count(X, H1) / H1.size, _count(X, H2) / H2.size
    out = EnergySplit(H1, H2, eta, norm, d, d1, d2)
    if out.gain < norm ** 2 / 8 - 1e-12:
        raise PropertyViolation(f"split gain {out.gain:.6g} below norm^2/8 = {norm ** 2 / 8:.6g}")
    return out


@dataclass(frozen=True)
class Cell:
    space: AffineSubspace
    label: str  # "U" or "N"
    uniformity: float


@dataclass
class RefinementTrace:
    rounds: list = field(default_factory=list)  # dicts: round, index, S, nonuniform_mass
    S: list = field(default_factory=list)  # S[n] (exact) after n rounds; per index for joint runs

    @property
    def m(self) -> int:
        return len(self.rounds)


@dataclass
class Partition:
    home: AffineSubspace
    cells: list
    status: str  # "ok" or "DimensionExhausted"
    trace: RefinementTrace

    @property
    def m(self) -> int:
        return self.trace.m

    def uniform(self):
        return [c for c in self.cells if c.label == "U"]


def _mean_square(U: SubsetOfH, cells, total: int) -> Fraction:
    return sum((Fraction(_count(U, V) ** 2, V.size) for V in cells), Fraction(0)) / total


def uniform_partition(U: SubsetOfH, t: float, u: float, min_dim: int = 1) -> Partition:
    """Split every non-uniform cell while the non-uniform cells carry mass >= t delta_U.

    A cell is non-uniform when the uniformity of U inside it is >= u.  The run
    stops with status DimensionExhausted instead of splitting a cell of
    dimension <= min_dim.
    """
    if not (0 < t < 1 and 0 < u < 1):
        raise ValueError("t and u must lie in (0, 1)")
    H = U.home
    total = H.size
    cells = [H]
    trace = RefinementTrace(S=[_mean_square(U, cells, total)])
    status = "ok"
    while True:
        norms = [restricted_uniformity(U, V) for V in cells]
        bad = [i for i, v in enumerate(norms) if v >= u]
        mass = Fraction(sum(cells[i].size for i in bad), total)
        if not bad or mass < Fraction(t) * Fraction(U.size, total):
            break
        if any(cells[i].dim <= min_dim for i in bad):
            status = "DimensionExhausted"
            break
        bad_set = set(bad)
        new_cells = []
        for i, V in enumerate(cells):
            if i in bad_set:
                V1, V2, _, _ = _split_cell(U, V)
                new_cells += [V1, V2]
            else:
                new_cells.append(V)
        cells = new_cells
        trace.S.append(_mean_square(U, cells, total))
        trace.rounds.append({"round": len(trace.rounds) + 1, "index": 1,
                             "S": [float(trace.S[-1])], "nonuniform_mass": float(mass)})
    norms = [restricted_uniformity(U, V) for V in cells]
    out = [Cell(V, "N" if v >= u else "U", v) for V, v in zip(cells, norms)]
    return Partition(H, out, status, trace)


@dataclass(frozen=True)
class JointCell:
    V1: AffineSubspace
    V2: AffineSubspace
    label: str  # "U", "N1", "N2" or "N3"
    uniformity: tuple[float, float, float]

    @property
    def W(self) -> AffineSubspace:
        return sum_subspaces(self.V1, self.V2)


@dataclass
class JointPartition:
    home: AffineSubspace
    cells: list
    status: str
    trace: RefinementTrace
    m: tuple[int, int, int]

    def uniform(self):
        return [c for c in self.cells if c.label == "U"]


def _pair_norms(Us, V1, V2):
    return (restricted_uniformity(Us[0], V1), restricted_uniformity(Us[1], V2),
            restricted_uniformity(Us[2], sum_subspaces(V1, V2)))


def _joint_mean_squares(Us, cells, N: int) -> list[Fraction]:
    """E_{H x H} E(U_j o pi_j | P)^2 with pi_1 = x, pi_2 = y, pi_3 = x + y."""
    out = []
    for j in range(3):
        acc = Fraction(0)
        for V1, V2 in cells:
            V = (V1, V2, sum_subspaces(V1, V2))[j]
            # cell mass |V1||V2| / N^2 times (|U cap V| / |V|)^2, with |V1| = |V2| = |V|
            acc += Fraction(_count(Us[j], V) ** 2, N * N)
        out.append(acc)
    return out


def joint_partition(U1: SubsetOfH, U2: SubsetOfH, U3: SubsetOfH, t: float, u: float,
                    min_dim: int = 1) -> JointPartition:
    """Partition H x H into products V1 x V2 of translates of one linear subspace.

    Index j = 1, 2 splits V_j along U_j's worst character and mirrors the split
    onto the partner factor; j = 3 splits W = V1 + V2 along U3's worst character
    and splits both factors the same way.  A conditional fires when the cells
    where U_j is non-uniform carry H x H mass at least t delta_{U_j}; the run
    stops when a full pass fires none of them.
    """
    if not (0 < t < 1 and 0 < u < 1):
        raise ValueError("t and u must lie in (0, 1)")
    Us = (U1, U2, U3)
    H = U1.home
    if not (U2.home == H and U3.home == H):
        raise ValueError("U1, U2, U3 must share their home space")
    N = H.size
    dens = [Fraction(U.size, N) for U in Us]
    cells = [(H, H)]
    trace = RefinementTrace(S=[_joint_mean_squares(Us, cells, N)])
    m = [0, 0, 0]
    status = "ok"
    fired = True
    while fired and status == "ok":
        fired = False
        for j in range(3):
            norms = [restricted_uniformity(Us[j], (V1, V2, sum_subspaces(V1, V2))[j])
                     for V1, V2 in cells]
            bad = [i for i, v in enumerate(norms) if v >= u]
            mass = Fraction(sum(cells[i][0].size ** 2 for i in bad), N * N)
            if not bad or mass < Fraction(t) * dens[j]:
                continue
            if any(cells[i][0].dim <= min_dim for i in bad):
                status = "DimensionExhausted"
                break
            union = np.zeros(N, dtype=bool)
            for i in bad:
                V = cells[i][j] if j < 2 else sum_subspaces(*cells[i])
                union[H.coords(V.enumerate(), check=False)] = True
            bad_set = set(bad)
            new_cells = []
            for i, (V1, V2) in enumerate(cells):
                if i not in bad_set:
                    new_cells.append((V1, V2))
                    continue
                driver = (V1, V2, sum_subspaces(V1, V2))[j]
                _, _, eta, _ = _split_cell(Us[j], driver)
                a1, a2 = split_by_character(V1, eta)
                b1, b2 = split_by_character(V2, eta)
                new_cells += [(a1, b1), (a2, b1), (a1, b2), (a2, b2)]
            cells = new_cells
            m[j] += 1
            fired = True
            trace.S.append(_joint_mean_squares(Us, cells, N))
            trace.rounds.append({"round": len(trace.rounds) + 1, "index": j + 1,
                                 "S": [float(s) for s in trace.S[-1]],
                                 "nonuniform_mass": float(mass),
                                 "union_mass_in_H": float(union.mean())})
    out = []
    for V1, V2 in cells:
        norms = _pair_norms(Us, V1, V2)
        label = next((f"N{j + 1}" for j in range(3) if norms[j] >= u), "U")
        out.append(JointCell(V1, V2, label, norms))
    return JointPartition(H, out, status, trace, tuple(m))


@dataclass
class UniformizeOutcome:
    X: np.ndarray  # X'' as a mask over H
    Y: np.ndarray
    D: np.ndarray
    H1: AffineSubspace  # H'
    H2: AffineSubspace  # H''
    translation: tuple[int, int]  # (a, b): X + a, Y + b land in the linear part H0
    delta_before: Fraction
    delta_after: Fraction
    partition: JointPartition
    checks: dict

    @property
    def H0(self) -> AffineSubspace:
        return self.H1.linear_part()


def _mask_on(H: AffineSubspace, V: AffineSubspace) -> np.ndarray:
    m = np.zeros(H.size, dtype=bool)
    m[H.coords(V.enumerate(), check=False)] = True
    return m


def _density(A: np.ndarray, L: Lattice) -> Fraction:
    return Fraction(int(np.count_nonzero(A & L.S)), L.size) if L.size else Fraction(0)


def uniformize_sublattice(H: AffineSubspace, X, Y, D, A, Xp, Yp, Dp, upsilon: float,
                          c: float | None = None, kappa: float = 0.125, C: float = 16.0,
                          min_dim: int = 1) -> UniformizeOutcome:
    """Pass from X' x Y' cap D' to a uniform sublattice over a pair of translates H', H''.

    X, Y, D, A are masks over H (A is |H| x |H|) and X', Y', D' the refined
    sets.  When c is omitted it is the achieved increment (delta' - delta) / delta^2.
    """
    X, Y, D, Xp, Yp, Dp = (np.asarray(m, dtype=bool) for m in (X, Y, D, Xp, Yp, Dp))
    A = np.asarray(A, dtype=bool)
    delta = _density(A, Lattice(X, Y, D))
    delta_p = _density(A, Lattice(Xp, Yp, Dp))
    d = float(delta)
    if c is None:
        c = float((delta_p - delta) / (delta * delta)) if delta > 0 else 0.0
    if not c > 0:
        raise NoGoodCell("the refined sublattice carries no density increment")
    t = (c / 16) * d * d
    U1, U2, U3 = SubsetOfH(H, Xp), SubsetOfH(H, Yp), SubsetOfH(H, Dp)
    P = joint_partition(U1, U2, U3, t, upsilon, min_dim=min_dim)
    if P.status != "ok":
        raise DimensionExhausted(f"joint partition stopped early after m = {P.m}")
    target = delta + Fraction(c / 2) * delta * delta
    dim_floor = H.dim - C / (d ** 4 * upsilon ** 2)
    best = None
    reports = []
    for cell in P.uniform():
        V1, V2, W = cell.V1, cell.V2, cell.W
        fills = (Fraction(_count(U1, V1), V1.size), Fraction(_count(U2, V2), V2.size),
                 Fraction(_count(U3, W), W.size))
        if min(fills) <= Fraction(t):
            continue  # an empty portion for some factor
        Xpp = Xp & _mask_on(H, V1)
        Ypp = Yp & _mask_on(H, V2)
        Dpp = Dp & _mask_on(H, W)
        sub = Lattice(Xpp, Ypp, Dpp)
        if sub.size == 0:
            continue
        dens = _density(A, sub)
        conc4 = [Fraction(int(s.sum()), V.size) >= Fraction(kappa) * delta * delta
                 * Fraction(int(s0.sum()), H.size)
                 for s, s0, V in ((Xpp, Xp, V1), (Ypp, Yp, V2), (Dpp, Dp, W))]
        checks = {
            "conc1": max(cell.uniformity) <= upsilon,
            "conc2": dens >= target,
            "conc3": V1.dim >= dim_floor,
            "conc4": all(conc4),
        }
        reports.append((cell, float(dens), checks))
        if all(checks.values()) and (best is None or dens > best[1]):
            best = (cell, dens, Xpp, Ypp, Dpp, checks)
    if best is None:
        raise NoGoodCell(f"no uniform cell reaches density {float(target):.6g} "
                         f"({len(reports)} candidates examined)")
    cell, dens, Xpp, Ypp, Dpp, checks = best
    checks = dict(checks, c=c, t=t, target=float(target), dim_floor=dim_floor)
    return UniformizeOutcome(Xpp, Ypp, Dpp, cell.V1, cell.V2,
                             (cell.V1.translate, cell.V2.translate), delta, dens, P, checks)
