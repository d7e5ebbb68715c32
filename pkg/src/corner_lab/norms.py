"""The lattice S, balanced functions, box norms and the counting forms.

Everything here works in fresh coordinates: H = F_2^k, elements are indices
0..2^k-1 and the group law is XOR.  Functions on H x H are dense (2^k, 2^k)
arrays indexed ``[x, y]``.

Two conventions worth keeping straight:

* ``E_{x in X}`` averages over the subset X (divide by |X|), ``E_{x in H}``
  over the whole space.  Each form below uses the normalization of its own
  definition, so e.g. :func:`t_form` averages over H^3 while the T entry of
  :func:`s_counts` averages over X x Y x H.
* A coordinate system re-indexes H x H: ``XD`` is (x, d) with d = x + y and
  ``YD`` is (y, d).  In the ``XD`` system the lattice is again a product
  lattice with the roles (X, Y, D) played by (X, D, Y); in ``YD`` by (Y, D, X).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DimensionTooLarge, EmptyLattice, EmptySet, NotContained, ZeroDensity
from .fourier import wht
from .gf2 import CUBIC_DIM_CAP, LocalView, SubsetOfH

SYSTEMS = ("XY", "XD", "YD")
BEYOND_CONVOLUTION_MAX_DIM = 10


@lru_cache(maxsize=8)
def xor_table(k: int) -> np.ndarray:
    idx = np.arange(1 << k, dtype=np.int32)
    out = idx[:, None] ^ idx[None, :]
    out.setflags(write=False)
    return out


def _mask(m) -> np.ndarray:
    if isinstance(m, SubsetOfH):
        m = m.mask
    return np.asarray(m, dtype=bool)


def _dim_of(n: int) -> int:
    k = n.bit_length() - 1
    if (1 << k) != n:
        raise ValueError(f"length {n} is not a power of two")
    return k


def to_system(F: np.ndarray, system: str) -> np.ndarray:
    """Re-index a function on H x H into the given coordinate system."""
    if system == "XY":
        return F
    k = _dim_of(F.shape[0])
    xt = xor_table(k)
    rows = np.arange(1 << k)[:, None]
    if system == "XD":
        return F[rows, xt]  # G[x, d] = F[x, x + d]
    if system == "YD":
        return F[xt, rows]  # G[y, d] = F[y + d, y]
    raise ValueError(f"unknown coordinate system {system!r}")


def from_system(G: np.ndarray, system: str) -> np.ndarray:
    """Inverse of :func:`to_system`."""
    if system in ("XY", "XD"):
        return to_system(G, system)
    if system == "YD":
        k = _dim_of(G.shape[0])
        return G[np.arange(1 << k)[None, :], xor_table(k)]  # F[x, y] = G[y, x + y]
    raise ValueError(f"unknown coordinate system {system!r}")


@dataclass(frozen=True, eq=False)
class Lattice:
    """S = X x Y cap X x_diag D over H = F_2^k."""

    X: np.ndarray
    Y: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        for name in "XYD":
            m = _mask(getattr(self, name)).copy()
            m.setflags(write=False)
            object.__setattr__(self, name, m)
        if not (self.X.shape == self.Y.shape == self.D.shape):
            raise ValueError("X, Y, D must live on the same space")
        _dim_of(self.X.shape[0])

    @property
    def k(self) -> int:
        return _dim_of(self.X.shape[0])

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @cached_property
    def S(self) -> np.ndarray:
        s = self.X[:, None] & self.Y[None, :] & self.D[xor_table(self.k)]
        s.setflags(write=False)
        return s

    @cached_property
    def size(self) -> int:
        """|S|, computed exactly through the transform of X, Y and D."""
        total = int(np.sum(wht(self.X) * wht(self.Y) * wht(self.D)))
        return total // self.N

    @property
    def dX(self) -> float:
        return float(self.X.mean())

    @property
    def dY(self) -> float:
        return float(self.Y.mean())

    @property
    def dD(self) -> float:
        return float(self.D.mean())

    def relabel(self, system: str) -> "Lattice":
        if system == "XY":
            return self
        if system == "XD":
            return Lattice(self.X, self.D, self.Y)
        if system == "YD":
            return Lattice(self.Y, self.D, self.X)
        raise ValueError(f"unknown coordinate system {system!r}")


def make_lattice(X, Y, D, H=None) -> Lattice:
    """Materialize the lattice of X, Y, D (masks or :class:`SubsetOfH` over H)."""
    return Lattice(_mask(X), _mask(Y), _mask(D))


def lattice_of(view: LocalView) -> Lattice:
    return Lattice(view.X, view.Y, view.D)


def density(A, L: Lattice) -> float:
    if L.size == 0:
        raise EmptyLattice("S is empty")
    return int(np.count_nonzero(A)) / L.size


def balanced_function(A, L: Lattice) -> np.ndarray:
    """f = A - delta S with delta = |A| / |S|."""
    A = np.asarray(A, dtype=bool)
    if L.size == 0:
        raise EmptyLattice("S is empty")
    if np.any(A & ~L.S):
        raise NotContained("A is not contained in S")
    delta = int(A.sum()) / L.size
    return A.astype(np.float64) - delta * L.S


def _restricted(F: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    return F[np.ix_(rows, cols)]


def box_inner(f: np.ndarray, L: Lattice, system: str = "XY") -> float:
    """E over boxes of the product of f at the four corners (no normalization).

    For XY this is E_{x,x' in X, y,y' in Y} f(x,y) f(x',y) f(x,y') f(x',y'),
    and equals E_{x,x'} (E_y f(x,y) f(x',y))^2, so it is never negative.
    """
    Ls = L.relabel(system)
    if not Ls.X.any() or not Ls.Y.any():
        raise ZeroDensity(f"empty coordinate set in system {system}")
    F = _restricted(to_system(np.asarray(f, dtype=np.float64), system), Ls.X, Ls.Y)
    nx, ny = F.shape
    G = F @ F.T
    return float(np.sum(G * G)) / (nx * nx * ny * ny)


def box_norm4(f: np.ndarray, L: Lattice, system: str = "XY") -> float:
    """The normalized fourth power: inner box average divided by the third density^4."""
    third = L.relabel(system).dD
    if third == 0:
        raise ZeroDensity(f"normalizing density vanishes in system {system}")
    return box_inner(f, L, system) / third ** 4


def box_norm(f: np.ndarray, L: Lattice, system: str = "XY") -> float:
    return max(box_norm4(f, L, system), 0.0) ** 0.25


def box_norms(f: np.ndarray, L: Lattice) -> dict[str, float]:
    return {s: box_norm(f, L, s) for s in SYSTEMS}


def _int_or_float(F) -> np.ndarray:
    F = np.asarray(F)
    if F.dtype == bool or np.issubdtype(F.dtype, np.integer):
        return F.astype(np.int64)
    return F.astype(np.float64)


def t_sum(f0, f1, f2, allow_large: bool = False):
    """sum_{x,s,y in H} f0(x,y) f1(x+s,y) f2(x,y+s); exact for integer input."""
    f0, f1, f2 = _int_or_float(f0), _int_or_float(f1), _int_or_float(f2)
    N = f0.shape[0]
    k = _dim_of(N)
    if k > CUBIC_DIM_CAP and not allow_large:
        raise DimensionTooLarge(f"cubic form refused at dim {k} > {CUBIC_DIM_CAP}")
    idx = np.arange(N)
    parts = np.array([np.sum(f0 * f1[idx ^ s, :] * f2[:, idx ^ s]) for s in range(N)])
    total = parts.sum()
    return int(total) if parts.dtype == np.int64 else float(total)


def t_form(f0, f1, f2, L: Lattice | None = None, allow_large: bool = False) -> float:
    """T(f0, f1, f2) = E_{x,s,y in H} f0(x,y) f1(x+s,y) f2(x,y+s)."""
    N = np.asarray(f0).shape[0]
    return t_sum(f0, f1, f2, allow_large=allow_large) / N ** 3


def count_corners(A) -> int:
    """Number of triples (x, y, d), d != 0, with (x,y), (x+d,y), (x,y+d) all in A."""
    if isinstance(A, LocalView):
        A = A.A
    A = np.asarray(A, dtype=bool)
    N = A.shape[0]
    idx = np.arange(N)
    total = 0
    for x, y in zip(*np.nonzero(A)):
        # d ranges over H; (x+d, y) in A and (x, y+d) in A
        total += int(np.count_nonzero(A[x ^ idx, y] & A[x, y ^ idx])) - 1
    return total


class SCounts(NamedTuple):
    scount1: float
    scount2: float
    scount3: float
    tcount: float
    boxcount1: float
    boxcount2: float


def s_count_main_terms(L: Lattice) -> SCounts:
    dX, dY, dD = L.dX, L.dY, L.dD
    return SCounts(dD, dY, dX, dX * dY * dD ** 2, dY ** 4, dX ** 4)


def _gram_square_sum(M: np.ndarray) -> int:
    G = (M @ M.T).astype(np.int64)
    return int(np.sum(G * G))


def s_counts(L: Lattice, allow_large: bool = False) -> SCounts:
    """The six lattice counting expectations, each with its own normalization.

    scount1..3: E over (x,y) in X x Y, (x,d) in X x D, (d,y) in D x Y of S;
    tcount: E_{x in X, y in Y, s in H} S(x,y) S(x+s,y) S(x,y+s);
    boxcount1/2: E over boxes of S in the XD / YD system.

    All sums are exact integers; float32 products stay below 2^24.  An empty
    D leaves the averages over D undefined; those entries are NaN.
    """
    nX, nY, nD = int(L.X.sum()), int(L.Y.sum()), int(L.D.sum())
    if 0 in (nX, nY):
        raise ZeroDensity("X and Y must be nonempty")
    if L.k > CUBIC_DIM_CAP and not allow_large:
        raise DimensionTooLarge(f"cubic/quartic counts refused at dim {L.k} > {CUBIC_DIM_CAP}")
    size = L.size
    S = L.S
    P = _restricted(to_system(S, "XD"), L.X, L.D).astype(np.float32)  # P[x, d] = S(x, x+d)
    R = _restricted(to_system(S, "YD"), L.Y, L.D).astype(np.float32)  # R[y, d] = S(y+d, y)
    # sum_s S(x+s,y) S(x,y+s) = sum_w P[x,w] R[y,w]
    T = (P @ R.T).astype(np.int64)
    tsum = int(np.sum(T[_restricted(S, L.X, L.Y)]))
    ratio = lambda a, b: a / b if b else float("nan")  # noqa: E731
    return SCounts(
        size / (nX * nY),
        ratio(size, nX * nD),
        ratio(size, nD * nY),
        tsum / (nX * nY * L.N),
        ratio(_gram_square_sum(P), nX * nX * nD * nD),
        ratio(_gram_square_sum(R), nY * nY * nD * nD),
    )


def phi(f, g, D) -> np.ndarray:
    """Phi(x) = delta_D |H|^-2 sum_a f^(a) g^(a) (-1)^{a.x}."""
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    D = _mask(D)
    N = f.shape[0]
    return D.mean() * wht(wht(f) * wht(g)) / float(N) ** 2


def beyond_convolution_deviation(f, g, D) -> float:
    """[E_{x,y} |E_s f(x+s) D(s) g(y+s) - Phi(x+y)|^2]^{1/2}."""
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    D = _mask(D)
    N = f.shape[0]
    k = _dim_of(N)
    if k > BEYOND_CONVOLUTION_MAX_DIM:
        raise DimensionTooLarge(f"beyond_convolution_deviation limited to dim <= {BEYOND_CONVOLUTION_MAX_DIM}")
    xt = xor_table(k)
    F = f[xt] * D[None, :]  # F[x, s] = f(x+s) D(s)
    G = g[xt]  # G[y, s] = g(y+s)
    psi = F @ G.T / N
    return float(np.sqrt(np.mean((psi - phi(f, g, D)[xt]) ** 2)))


def q_form(f0, f1, f2, f3, Xpp, Ypp) -> float:
    """E_{x,x' in X'', y,y' in Y''} f0(x,y) f1(x',y) f2(x,y') f3(x',y')."""
    Xpp, Ypp = _mask(Xpp), _mask(Ypp)
    if not Xpp.any() or not Ypp.any():
        raise EmptySet("X'' and Y'' must be nonempty")
    F = [_restricted(np.asarray(fi, dtype=np.float64), Xpp, Ypp) for fi in (f0, f1, f2, f3)]
    m, p = F[0].shape
    return float(np.sum((F[0] @ F[1].T) * (F[2] @ F[3].T))) / (m * m * p * p)


def q_expansion(f, S, delta: float, Xpp, Ypp) -> tuple[float, ...]:
    """The six terms of Q''(A,A,A,S) after substituting A = f + delta S."""
    Q = lambda a, b, c, d: q_form(a, b, c, d, Xpp, Ypp)  # noqa: E731
    return (
        delta ** 3 * Q(S, S, S, S),
        3 * delta ** 2 * Q(f, S, S, S),
        delta * Q(f, S, f, S),
        delta * Q(S, f, f, S),
        delta * Q(f, f, S, S),
        Q(f, f, f, S),
    )
