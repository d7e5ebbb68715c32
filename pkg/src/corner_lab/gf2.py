"""Linear algebra over F_2: affine subspaces, subsets and corner configurations.

Elements of F_2^n are stored as Python ints (or ``uint32`` arrays) whose bit ``i``
is the i-th coordinate; addition is XOR.  An affine subspace keeps a reduced
echelon basis (pivot = highest set bit, each pivot bit present in exactly one
basis vector) sorted by pivot, and a translate reduced against that basis, so
equal subspaces compare equal.

Enumeration is lexicographic in the coefficient vector: index ``i`` maps to
``translate ^ XOR{basis[j] : bit j of i}``.  The coefficient of ``basis[j]`` in
``x`` is simply the pivot bit ``pivots[j]`` of ``x ^ translate``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateCharacter,
    DependentBasis,
    MismatchedLinearParts,
    NotContained,
    ValidationError,
)

MAX_AMBIENT_DIM = 20
CUBIC_DIM_CAP = 9

ELEMENT_DTYPE = np.uint32


def parity(v: int) -> int:
    return bin(v).count("1") & 1


def parity_array(a) -> np.ndarray:
    """Parity of the popcount of every entry of a ``uint32`` array."""
    a = np.asarray(a, dtype=ELEMENT_DTYPE).copy()
    for s in (16, 8, 4, 2, 1):
        a ^= a >> ELEMENT_DTYPE(s)
    return (a & ELEMENT_DTYPE(1)).astype(np.uint8)


def dot(x: int, y: int) -> int:
    return parity(x & y)


def _echelon(vectors: Iterable[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    rows: dict[int, int] = {}  # pivot -> row
    for v in vectors:
        v = int(v)
        for p in sorted(rows, reverse=True):
            if (v >> p) & 1:
                v ^= rows[p]
        if v == 0:
            raise DependentBasis("basis vectors are linearly dependent over F_2")
        p = v.bit_length() - 1
        for q in rows:
            if (rows[q] >> p) & 1:
                rows[q] ^= v
        rows[p] = v
    pivots = tuple(sorted(rows))
    return tuple(rows[p] for p in pivots), pivots


def _reduce(v: int, basis: Sequence[int], pivots: Sequence[int]) -> int:
    for b, p in zip(basis, pivots):
        if (v >> p) & 1:
            v ^= b
    return v


@dataclass(frozen=True)
class AffineSubspace:
    n: int
    basis: tuple[int, ...]
    translate: int = 0
    pivots: tuple[int, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if len(self.pivots) != len(self.basis):
            object.__setattr__(self, "pivots", tuple(b.bit_length() - 1 for b in self.basis))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def size(self) -> int:
        return 1 << len(self.basis)

    @property
    def is_linear(self) -> bool:
        return self.translate == 0

    @cached_property
    def _elements(self) -> np.ndarray:
        out = np.array([self.translate], dtype=ELEMENT_DTYPE)
        for b in self.basis:
            out = np.concatenate([out, out ^ ELEMENT_DTYPE(b)])
        out.setflags(write=False)
        return out

    def enumerate(self) -> np.ndarray:
        """All elements, in canonical order (read-only array)."""
        return self._elements

    def _offsets(self, xs) -> np.ndarray:
        v = np.asarray(xs, dtype=ELEMENT_DTYPE) ^ ELEMENT_DTYPE(self.translate)
        for b, p in zip(self.basis, self.pivots):
            bit = (v >> ELEMENT_DTYPE(p)) & ELEMENT_DTYPE(1)
            v = v ^ (bit * ELEMENT_DTYPE(b))
        return v

    def contains(self, x: int) -> bool:
        return _reduce(int(x) ^ self.translate, self.basis, self.pivots) == 0

    def contains_all(self, xs) -> np.ndarray:
        return self._offsets(xs) == 0

    def coords(self, xs, check: bool = True) -> np.ndarray:
        """Enumeration index of each element of ``xs``."""
        xs = np.asarray(xs, dtype=ELEMENT_DTYPE)
        if check and xs.size and not self.contains_all(xs).all():
            raise NotContained("element outside the affine subspace")
        v = xs ^ ELEMENT_DTYPE(self.translate)
        idx = np.zeros(xs.shape, dtype=np.int64)
        for j, p in enumerate(self.pivots):
            idx |= ((v >> ELEMENT_DTYPE(p)) & ELEMENT_DTYPE(1)).astype(np.int64) << j
        return idx

    def linear_part(self) -> "AffineSubspace":
        return AffineSubspace(self.n, self.basis, 0, self.pivots)

    def translated(self, v: int) -> "AffineSubspace":
        t = _reduce(self.translate ^ int(v), self.basis, self.pivots)
        return AffineSubspace(self.n, self.basis, t, self.pivots)

    def coset_rep(self, v: int) -> int:
        """Canonical representative of ``v + linear_part``."""
        return _reduce(int(v), self.basis, self.pivots)

    def same_linear_part(self, other: "AffineSubspace") -> bool:
        return self.n == other.n and self.basis == other.basis

    def character_from_coefficients(self, xi: int) -> int:
        """Ambient vector eta with eta . x = xi . coords(x) + eta . translate on this subspace."""
        eta = 0
        for j, p in enumerate(self.pivots):
            if (xi >> j) & 1:
                eta |= 1 << p
        return eta

    def to_dict(self) -> dict:
        return {"basis": list(self.basis), "translate": self.translate}


def make_subspace(basis: Iterable[int], translate: int = 0, n: int | None = None) -> AffineSubspace:
    """Build the affine subspace ``translate + span(basis)``.

    Raises DependentBasis when the given vectors are linearly dependent.
    """
    vectors = [int(b) for b in basis]
    if n is None:
        n = max([v.bit_length() for v in vectors] + [int(translate).bit_length()])
    if n > MAX_AMBIENT_DIM:
        raise ValidationError([f"ambient dimension {n} exceeds cap {MAX_AMBIENT_DIM}"])
    if any(v >> n for v in vectors) or int(translate) >> n:
        raise ValidationError([f"vector wider than n={n} bits"])
    b, pivots = _echelon(vectors)
    t = _reduce(int(translate), b, pivots)
    return AffineSubspace(n, b, t, pivots)


def full_space(n: int) -> AffineSubspace:
    return make_subspace([1 << i for i in range(n)], 0, n)


def split_by_character(H: AffineSubspace, xi: int) -> tuple[AffineSubspace, AffineSubspace]:
    """Split ``H`` into ``{x . xi = 0}`` and ``{x . xi = 1}``."""
    values = [dot(b, xi) for b in H.basis]
    if not any(values):
        raise DegenerateCharacter("character is constant on H")
    p = values.index(1)
    bp = H.basis[p]
    new_basis = [b ^ bp if v else b for j, (b, v) in enumerate(zip(H.basis, values)) if j != p]
    t0 = H.translate if dot(H.translate, xi) == 0 else H.translate ^ bp
    lin = make_subspace(new_basis, 0, H.n)
    return lin.translated(t0), lin.translated(t0 ^ bp)


def sum_subspaces(V1: AffineSubspace, V2: AffineSubspace) -> AffineSubspace:
    """Minkowski sum of two translates of one linear subspace."""
    if not V1.same_linear_part(V2):
        raise MismatchedLinearParts("sum_subspaces needs translates of one linear part")
    return V1.translated(V2.translate)


def as_elements(values) -> np.ndarray:
    arr = np.unique(np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                               dtype=ELEMENT_DTYPE))
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SubsetOfH:
    """A subset of ``home`` stored as a mask over the home's enumeration."""

    home: AffineSubspace
    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != (self.home.size,):
            raise ValueError(f"mask length {m.shape} does not match |H| = {self.home.size}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @classmethod
    def from_elements(cls, home: AffineSubspace, elements) -> "SubsetOfH":
        mask = np.zeros(home.size, dtype=bool)
        elements = np.asarray(list(elements) if not isinstance(elements, np.ndarray) else elements,
                              dtype=ELEMENT_DTYPE)
        mask[home.coords(elements)] = True
        return cls(home, mask)

    @classmethod
    def full(cls, home: AffineSubspace) -> "SubsetOfH":
        return cls(home, np.ones(home.size, dtype=bool))

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    @property
    def density(self) -> float:
        return self.size / self.home.size

    def elements(self) -> np.ndarray:
        return self.home.enumerate()[self.mask]

    def restrict(self, V: AffineSubspace) -> "SubsetOfH":
        """This subset intersected with ``V``, re-homed on ``V`` (``V`` inside the home)."""
        return SubsetOfH(V, self.mask[self.home.coords(V.enumerate())])

    def translated(self, v: int) -> "SubsetOfH":
        home = self.home.translated(v)
        mask = np.zeros(home.size, dtype=bool)
        mask[home.coords(self.elements() ^ ELEMENT_DTYPE(v))] = True
        return SubsetOfH(home, mask)

    def __eq__(self, other):
        return (isinstance(other, SubsetOfH) and self.home == other.home
                and bool(np.array_equal(self.mask, other.mask)))

    __hash__ = None


@dataclass(frozen=True)
class LocalView:
    """A configuration in fresh coordinates: H = F_2^k, index arithmetic is XOR."""

    k: int
    X: np.ndarray
    Y: np.ndarray
    D: np.ndarray
    A: np.ndarray  # (2^k, 2^k) bool

    @property
    def N(self) -> int:
        return 1 << self.k


@dataclass(frozen=True, eq=False)
class Configuration:
    """X, Y, D and A in ambient coordinates.

    ``H`` is the home of X; Y and D sit in cosets of ``H``'s linear part, with
    the coset of D equal to the sum of the cosets of X and Y.  Every pair of A
    must lie in S = {(x, y) : x in X, y in Y, x + y in D}.
    """

    n: int
    H: AffineSubspace
    X: np.ndarray
    Y: np.ndarray
    D: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        problems = []
        if self.n > MAX_AMBIENT_DIM:
            problems.append(f"n={self.n} exceeds cap {MAX_AMBIENT_DIM}")
        if self.H.n != self.n:
            problems.append("H lives in a different ambient space")
        for name in "XYD":
            object.__setattr__(self, name, as_elements(getattr(self, name)))
        A = np.asarray(self.A, dtype=ELEMENT_DTYPE).reshape(-1, 2)
        if len(A):
            A = np.unique(A, axis=0)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        if problems:
            raise ValidationError(problems)
        lin = self.H.linear_part()
        if len(self.X) and not self.H.contains_all(self.X).all():
            raise NotContained("X is not inside H")
        if len(self.Y) and not lin.translated(int(self.Y[0])).contains_all(self.Y).all():
            raise NotContained("Y does not lie in a single coset of H")
        if len(self.D) and not lin.translated(self.d_coset).contains_all(self.D).all():
            raise NotContained("D does not lie in the coset X + Y")
        if len(A):
            ok = (np.isin(A[:, 0], self.X) & np.isin(A[:, 1], self.Y)
                  & np.isin(A[:, 0] ^ A[:, 1], self.D))
            if not ok.all():
                raise NotContained("A is not contained in S = X x Y cap X x_diag D")

    @property
    def y_coset(self) -> int:
        lin = self.H.linear_part()
        return lin.coset_rep(int(self.Y[0])) if len(self.Y) else self.H.translate

    @property
    def d_coset(self) -> int:
        return self.H.linear_part().coset_rep(self.H.translate ^ self.y_coset)

    @property
    def dim(self) -> int:
        return self.H.dim

    def local(self) -> LocalView:
        lin = self.H.linear_part()
        N = lin.size
        cx, cy = self.H.translate, self.y_coset

        def mask(elems, c):
            m = np.zeros(N, dtype=bool)
            m[lin.coords(elems ^ ELEMENT_DTYPE(c), check=False)] = True
            return m

        A = np.zeros((N, N), dtype=bool)
        if len(self.A):
            A[lin.coords(self.A[:, 0] ^ ELEMENT_DTYPE(cx), check=False),
              lin.coords(self.A[:, 1] ^ ELEMENT_DTYPE(cy), check=False)] = True
        return LocalView(lin.dim, mask(self.X, cx), mask(self.Y, cy), mask(self.D, cx ^ cy), A)

    @classmethod
    def from_local(cls, k: int, X, Y, D, A) -> "Configuration":
        """Configuration over the full space F_2^k from index masks."""
        idx = np.arange(1 << k, dtype=ELEMENT_DTYPE)
        rows, cols = np.nonzero(np.asarray(A, dtype=bool))
        pairs = np.stack([rows, cols], axis=1).astype(ELEMENT_DTYPE)
        return cls(k, full_space(k), idx[np.asarray(X, bool)], idx[np.asarray(Y, bool)],
                   idx[np.asarray(D, bool)], pairs)

    @classmethod
    def full(cls, n: int, A) -> "Configuration":
        idx = np.arange(1 << n, dtype=ELEMENT_DTYPE)
        return cls(n, full_space(n), idx, idx, idx, A)

    def same_as(self, other: "Configuration") -> bool:
        return (self.n == other.n and self.H == other.H
                and all(np.array_equal(getattr(self, s), getattr(other, s)) for s in "XYDA"))


def translate_configuration(cfg: Configuration, v: int, w: int) -> Configuration:
    """Shift X by v, Y by w, D by v + w and A by (v, w)."""
    v, w = int(v), int(w)
    cv, cw, cd = ELEMENT_DTYPE(v), ELEMENT_DTYPE(w), ELEMENT_DTYPE(v ^ w)
    A = cfg.A.copy()
    if len(A):
        A[:, 0] ^= cv
        A[:, 1] ^= cw
    return Configuration(cfg.n, cfg.H.translated(v), cfg.X ^ cv, cfg.Y ^ cw, cfg.D ^ cd, A)


def recode_to_subspace(cfg: Configuration, H0: AffineSubspace) -> Configuration:
    """Re-express ``cfg`` over F_2^{dim H0} through the basis of ``H0``.

    X and Y must lie in ``H0`` and D in ``H0 + H0`` (its linear part); x and y
    are sent to the coefficients of ``x - t0``, d to the coefficients of d.
    """
    lin = H0.linear_part()
    t0 = ELEMENT_DTYPE(H0.translate)
    for name, elems, space in (("X", cfg.X, H0), ("Y", cfg.Y, H0), ("D", cfg.D, lin)):
        if len(elems) and not space.contains_all(elems).all():
            raise NotContained(f"{name} is not contained in the target subspace")
    k = H0.dim
    X = lin.coords(cfg.X ^ t0, check=False).astype(ELEMENT_DTYPE)
    Y = lin.coords(cfg.Y ^ t0, check=False).astype(ELEMENT_DTYPE)
    D = lin.coords(cfg.D, check=False).astype(ELEMENT_DTYPE)
    A = np.zeros((0, 2), dtype=ELEMENT_DTYPE)
    if len(cfg.A):
        A = np.stack([lin.coords(cfg.A[:, 0] ^ t0, check=False),
                      lin.coords(cfg.A[:, 1] ^ t0, check=False)], axis=1).astype(ELEMENT_DTYPE)
    return Configuration(k, full_space(k), X, Y, D, A)
