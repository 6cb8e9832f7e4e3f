import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elcalderon import mixing

STENCILS = {
    "Q": (mixing.matrix_Q, 1.0),
    "M": (mixing.matrix_M, 1.0),
    "D": (mixing.matrix_D, 0.0),
    "P+": (lambda N, o=None: mixing.matrix_Ppm(N, o)[0], 0.5),
    "P-": (lambda N, o=None: mixing.matrix_Ppm(N, o)[1], 0.5),
}


def test_first_rows():
    np.testing.assert_allclose(mixing.matrix_Q(6).first_row(), np.array([22, 1, 0, 0, 0, 1]) / 24)
    np.testing.assert_allclose(mixing.matrix_Ppm(5)[0].first_row(), np.array([5, 0, 0, 0, 1]) / 12)
    np.testing.assert_allclose(mixing.matrix_M(5).first_row(), np.array([7, 1, 0, 0, 1]) / 9)
    np.testing.assert_allclose(mixing.matrix_D(4).first_row(), [-1, 1, 0, 0])


@pytest.mark.parametrize("name", list(STENCILS))
@given(N=st.integers(3, 40))
@settings(max_examples=15, deadline=None)
def test_row_sums(name, N):
    build, total = STENCILS[name]
    A = build(N).dense()
    np.testing.assert_allclose(A.sum(axis=1), total, atol=1e-14)


def test_Q_symmetric_and_P_transpose():
    Q = mixing.matrix_Q(9).dense()
    np.testing.assert_array_equal(Q, Q.T)
    Pp, Pm = mixing.matrix_Ppm(9)
    np.testing.assert_array_equal(Pm.dense(), Pp.dense().T)


def test_H_row_sums_zero():
    np.testing.assert_allclose(mixing.matrix_H(10).sum(axis=1), 0)


@pytest.mark.parametrize("name", list(STENCILS))
def test_commutes_with_cyclic_shift(name):
    N = 11
    A = STENCILS[name][0](N).dense()[:N, :N]
    S = np.roll(np.eye(N), 1, axis=1)
    np.testing.assert_allclose(A @ S, S @ A, atol=1e-15)


def test_entry_depends_on_offset_only():
    N = 8
    A = mixing.matrix_Q(N).dense()[:N, :N]
    for i in range(N):
        np.testing.assert_array_equal(A[i], np.roll(A[0], i))


def test_Q_weights_integrate_cubics():
    # look-around rule: the Q weights on f(-1), f(0), f(1) integrate f over [-1/2, 1/2]
    w = mixing.matrix_Q(5).first_row()
    weights = {0: w[0], 1: w[1], -1: w[-1]}
    for coeffs in np.random.default_rng(3).normal(size=(10, 4)):
        f = np.polynomial.Polynomial(coeffs)
        F = f.integ()
        quad = sum(wk * f(k) for k, wk in weights.items())
        assert quad == pytest.approx(F(0.5) - F(-0.5), rel=1e-13, abs=1e-13)


def test_H_nullspace_and_doubling():
    N = 10
    rng = np.random.default_rng(0)
    v = rng.normal(size=2 * N) + 1j * rng.normal(size=2 * N)
    even = 0.5 * (v + mixing.flip_blocks(v))
    odd = 0.5 * (v - mixing.flip_blocks(v))
    assert mixing.is_even(even) and mixing.is_odd(odd)
    H, aH = mixing.matrix_H(N), mixing.matrix_absH(N)
    np.testing.assert_allclose(H @ even, 0, atol=1e-15)
    np.testing.assert_allclose(H @ odd, 2 * odd, atol=1e-15)
    np.testing.assert_allclose(aH @ odd, 0, atol=1e-15)
    np.testing.assert_allclose(aH @ even, 2 * even, atol=1e-15)
    np.testing.assert_array_equal(aH, np.abs(H))


def test_H_rejects_odd_and_scenes():
    with pytest.raises(ValueError):
        mixing.matrix_H(7)
    with pytest.raises(ValueError):
        mixing.matrix_absH(8, ((0, 4), (4, 8)))


@pytest.mark.parametrize("N", [1, 2])
def test_min_sizes(N):
    with pytest.raises(ValueError):
        mixing.matrix_Q(N)
    with pytest.raises(ValueError):
        mixing.matrix_D(N)
    with pytest.raises(ValueError):
        mixing.matrix_M(N)


def test_Ppm_minimum():
    with pytest.raises(ValueError):
        mixing.matrix_Ppm(1)
    mixing.matrix_Ppm(2)


def test_apply_basis_vector_gives_column():
    N = 7
    M = mixing.matrix_M(N)
    D = M.dense()
    for k in (0, 3, N + 2):
        e = np.zeros(2 * N)
        e[k] = 1
        np.testing.assert_allclose(mixing.apply(M, e), D[:, k])


def test_components_do_not_mix():
    N = 6
    v = np.concatenate([np.arange(1.0, N + 1), np.zeros(N)])
    out = mixing.matrix_Q(N) @ v
    np.testing.assert_array_equal(out[N:], 0)


def test_multi_curve_is_per_curve():
    offsets = ((0, 5), (5, 12))
    rng = np.random.default_rng(1)
    v = rng.normal(size=24)
    Q = mixing.matrix_Q(12, offsets)
    out = Q @ v
    for a, b in offsets:
        n = b - a
        Qi = mixing.matrix_Q(n)
        np.testing.assert_allclose(out[a:b], (Qi @ np.concatenate([v[a:b], v[12 + a:12 + b]]))[:n])
        np.testing.assert_allclose(out[12 + a:12 + b], (Qi @ np.concatenate([v[a:b], v[12 + a:12 + b]]))[n:])


def test_offsets_must_tile():
    with pytest.raises(ValueError):
        mixing.matrix_Q(10, ((0, 4), (5, 10)))


@given(N=st.integers(3, 30), cols=st.integers(1, 4), seed=st.integers(0, 2**16))
@settings(max_examples=30, deadline=None)
def test_matrix_free_matches_dense(N, cols, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(2 * N, cols)) + 1j * rng.normal(size=(2 * N, cols))
    for build, _ in STENCILS.values():
        A = build(N)
        D = A.dense()
        np.testing.assert_allclose(A @ X, D @ X, atol=1e-13)
        Y = rng.normal(size=(cols, 2 * N))
        np.testing.assert_allclose(Y @ A, Y @ D, atol=1e-13)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        mixing.matrix_Q(5) @ np.ones(9)


def test_even_odd_helpers_on_zero():
    z = np.zeros(8)
    assert mixing.is_even(z) and mixing.is_odd(z)
