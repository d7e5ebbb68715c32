"""Walsh-Hadamard transform over H = F_2^k and the uniformity norm.

Functions on H are arrays of length 2^k indexed by the canonical enumeration of
H; the dual group is indexed the same way and the character at xi is
(-1)^{popcount(i & xi)}.  Integer input stays in int64 and is transformed
exactly.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimensionTooLarge
from .gf2 import SubsetOfH, parity_array

NAIVE_DFT_MAX_DIM = 12


def _values(f) -> np.ndarray:
    if isinstance(f, SubsetOfH):
        f = f.mask
    a = np.asarray(f)
    if a.dtype == bool or np.issubdtype(a.dtype, np.integer):
        return a.astype(np.int64)
    return a.astype(np.float64)


def _log2_length(n: int) -> int:
    k = n.bit_length() - 1
    if n < 1 or (1 << k) != n:
        raise ValueError(f"length {n} is not a power of two")
    return k


def wht(f, axis: int = -1) -> np.ndarray:
    """Unnormalized transform: out[xi] = sum_x f[x] (-1)^{x . xi}.

    Works along ``axis`` so batches of functions can be transformed at once.
    """
    a = np.moveaxis(_values(f), axis, -1).copy()
    n = a.shape[-1]
    _log2_length(n)
    lead = a.shape[:-1]
    h = 1
    while h < n:
        v = a.reshape(*lead, n // (2 * h), 2, h)
        lo = v[..., 0, :].copy()
        hi = v[..., 1, :]
        v[..., 0, :] += hi
        v[..., 1, :] = lo - hi
        h *= 2
    return np.moveaxis(a, -1, axis)


def character_table(k: int) -> np.ndarray:
    """The 2^k x 2^k matrix of (-1)^{x . xi} as int64."""
    idx = np.arange(1 << k, dtype=np.uint32)
    return 1 - 2 * parity_array(idx[:, None] & idx[None, :]).astype(np.int64)


def naive_dft(f) -> np.ndarray:
    """Direct double-sum transform; the reference for :func:`wht`."""
    a = _values(f)
    k = _log2_length(a.shape[-1])
    if k > NAIVE_DFT_MAX_DIM:
        raise DimensionTooLarge(f"naive_dft limited to dim <= {NAIVE_DFT_MAX_DIM}")
    return a @ character_table(k).astype(a.dtype)


class Uniformity(NamedTuple):
    value: float
    xi: int  # maximizing nonzero character, 0 when dim(H) = 0


def max_character(X) -> Uniformity:
    """Largest nontrivial normalized coefficient of X and where it is attained.

    Ties go to the smallest xi in enumeration order.
    """
    spec = wht(X)
    if spec.shape[-1] == 1:
        return Uniformity(0.0, 0)
    mags = np.abs(spec[1:])
    j = int(np.argmax(mags))
    return Uniformity(float(mags[j]) / spec.shape[-1], j + 1)


def uniformity_norm(X) -> float:
    """sup over xi != 0 of |X^(xi)| / |H|."""
    return max_character(X).value


def convolution(X, G) -> np.ndarray:
    """c(d) = E_{y in H} X(d - y) G(y)."""
    x = _values(X).astype(np.float64)
    g = _values(G).astype(np.float64)
    n = x.shape[-1]
    return wht(wht(x) * wht(g)) / float(n) ** 2


def convolution_deviation(X, G) -> float:
    """[E_d |E_y X(d - y) G(y) - delta_X E_y G(y)|^2]^{1/2}."""
    x = _values(X).astype(np.float64)
    g = _values(G).astype(np.float64)
    dev = convolution(x, g) - x.mean() * g.mean()
    return float(np.sqrt(np.mean(dev ** 2)))


def one_coordinate_deviation(A, B) -> float:
    """E_{x in H} |E_{y in H} A(x + y) B(y) - P(A) P(B)|^2 (squared, not rooted)."""
    return convolution_deviation(A, B) ** 2
