import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import oracle_dft, oracle_uniformity
from corner_lab.errors import DimensionTooLarge
from corner_lab.fourier import (
    convolution,
    convolution_deviation,
    max_character,
    naive_dft,
    one_coordinate_deviation,
    uniformity_norm,
    wht,
)
from corner_lab.gf2 import SubsetOfH, full_space


def test_all_ones_transform():
    out = wht(np.ones(4, dtype=np.int64))
    assert out.tolist() == [4, 0, 0, 0]
    assert naive_dft(np.ones(4, dtype=np.int64)).tolist() == [4, 0, 0, 0]


def test_point_mass_transform():
    g = np.zeros(8, dtype=np.int64)
    g[0] = 1
    assert wht(g).tolist() == [1] * 8
    assert naive_dft(g).tolist() == [1] * 8


def test_matches_python_double_sum(rng):
    for k in range(0, 6):
        g = rng.integers(-50, 50, 1 << k)
        assert wht(g).tolist() == oracle_dft(g) == naive_dft(g).tolist()


def test_batched_axis(rng):
    G = rng.integers(-9, 9, (5, 16))
    assert np.array_equal(wht(G, axis=1), np.stack([wht(r) for r in G]))
    assert np.array_equal(wht(G.T, axis=0), wht(G, axis=1).T)


def test_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        wht(np.ones(6))


def test_naive_dft_dimension_cap():
    with pytest.raises(DimensionTooLarge):
        naive_dft(np.ones(1 << 13, dtype=np.int64))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 8).flatmap(lambda k: arrays(np.int64, 1 << k, elements=st.integers(-1000, 1000))))
def test_parseval_and_involution(g):
    N = g.size
    G = wht(g)
    assert int(np.sum(G * G)) == N * int(np.sum(g * g))
    assert np.array_equal(wht(G), N * g)


def test_uniformity_of_full_space_is_zero():
    assert uniformity_norm(np.ones(16, dtype=bool)) == 0.0


def test_uniformity_of_hyperplane_is_half():
    idx = np.arange(16)
    xi0 = 0b1010
    X = np.array([bin(x & xi0).count("1") % 2 == 0 for x in idx])
    u = max_character(X)
    assert u.value == 0.5 and u.xi == xi0


def test_uniformity_of_singleton():
    X = np.zeros(32, dtype=bool)
    X[0] = True
    assert uniformity_norm(X) == 1 / 32


def test_uniformity_of_trivial_space():
    assert max_character(np.ones(1, dtype=bool)) == (0.0, 0)


def test_uniformity_matches_oracle(rng):
    for k in (3, 5, 7):
        X = rng.random(1 << k) < 0.4
        assert uniformity_norm(X) == pytest.approx(oracle_uniformity(X), abs=0)


def test_uniformity_invariant_under_translation_and_complement(rng):
    H = full_space(6)
    for _ in range(20):
        X = SubsetOfH(H, rng.random(64) < 0.3)
        v = int(rng.integers(0, 64))
        assert uniformity_norm(X.translated(v)) == uniformity_norm(X)
        assert uniformity_norm(~X.mask) == uniformity_norm(X)


def test_deleting_points_moves_uniformity_by_at_most_their_density(rng):
    for _ in range(50):
        X = rng.random(128) < 0.5
        Y = X & (rng.random(128) < 0.9)
        removed = int(X.sum() - Y.sum())
        assert abs(uniformity_norm(X) - uniformity_norm(Y)) <= removed / 128 + 1e-15


def test_convolution_with_full_space_is_mean(rng):
    G = rng.normal(size=32)
    assert convolution_deviation(np.ones(32, dtype=bool), G) == pytest.approx(0, abs=1e-12)
    assert np.allclose(convolution(np.ones(32, dtype=bool), G), G.mean())


def test_convolution_of_zero():
    X = np.arange(16) % 3 == 0
    assert convolution_deviation(X, np.zeros(16)) == 0.0


def test_convolution_matches_direct_sum(rng):
    X = rng.random(16) < 0.5
    G = rng.normal(size=16)
    direct = [np.mean([X[d ^ y] * G[y] for y in range(16)]) for d in range(16)]
    assert np.allclose(convolution(X, G), direct)


def test_convolution_deviation_bound(rng):
    for _ in range(1000):
        X = rng.random(256) < rng.uniform(0.05, 0.95)
        G = rng.normal(size=256) * (rng.random(256) < 0.5)
        lhs = convolution_deviation(X, G)
        rhs = uniformity_norm(X) * np.sqrt(np.mean(G ** 2))
        assert lhs <= rhs + 1e-12


def test_one_coordinate_deviation_bounds(rng):
    # the squared deviation is at most ||A||^2 P(B); the weaker ||A||^(1/2) P(B) follows
    for _ in range(300):
        A = rng.random(128) < rng.uniform(0.1, 0.9)
        B = rng.random(128) < rng.uniform(0.1, 0.9)
        lhs = one_coordinate_deviation(A, B)
        nA = uniformity_norm(A)
        assert lhs <= nA ** 2 * B.mean() + 1e-12
        assert lhs <= nA ** 0.5 * B.mean() + 1e-12
