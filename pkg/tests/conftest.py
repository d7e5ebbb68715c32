"""Shared brute-force oracles and the acceptance summary printer.

The oracles loop over elements in plain Python and never call the package's
transform or counting code, so a test comparing the two is a genuine second route.
"""

import itertools

import numpy as np
import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for c in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[c])


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def popcount(v: int) -> int:
    return bin(v).count("1")


def chi(xi: int, x: int) -> int:
    return -1 if popcount(xi & x) % 2 else 1


def oracle_dft(g) -> list[int]:
    N = len(g)
    return [sum(int(g[x]) * chi(xi, x) for x in range(N)) for xi in range(N)]


def oracle_uniformity(mask) -> float:
    N = len(mask)
    coeffs = oracle_dft([1 if b else 0 for b in mask])
    return max((abs(c) for c in coeffs[1:]), default=0) / N


def oracle_corners(A) -> int:
    N = len(A)
    return sum(1 for x in range(N) for y in range(N) for d in range(1, N)
               if A[x][y] and A[x ^ d][y] and A[x][y ^ d])


def has_corner(A) -> bool:
    """Vectorized search over d, independent of the point-wise counter."""
    A = np.asarray(A, dtype=bool)
    idx = np.arange(A.shape[0])
    return any(np.any(A & A[idx ^ d, :] & A[:, idx ^ d]) for d in range(1, A.shape[0]))


def oracle_lattice(X, Y, D):
    N = len(X)
    return [[bool(X[x] and Y[y] and D[x ^ y]) for y in range(N)] for x in range(N)]


def oracle_box(F, rows, cols) -> float:
    """E over x, x' in rows and y, y' in cols of F(x,y) F(x',y) F(x,y') F(x',y')."""
    total = 0.0
    for x, xp in itertools.product(rows, repeat=2):
        for y, yp in itertools.product(cols, repeat=2):
            total += F[x][y] * F[xp][y] * F[x][yp] * F[xp][yp]
    return total / (len(rows) ** 2 * len(cols) ** 2)


def random_mask(rng, N, p=0.5):
    return rng.random(N) < p


def subspace_elements(basis, translate=0):
    """All sums of subsets of the basis, shifted by translate."""
    out = set()
    for bits in itertools.product((0, 1), repeat=len(basis)):
        v = translate
        for b, on in zip(basis, bits):
            if on:
                v ^= b
        out.add(v)
    return out
