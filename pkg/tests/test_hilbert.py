import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elcalderon import hilbert
from elcalderon.hilbert import TrigPoly

grid_and_point = st.integers(1, 128).flatmap(
    lambda N: st.tuples(st.just(N), st.integers(0, N - 1), st.floats(0.05, 0.95))
).map(lambda p: (p[0], (p[1] + p[2]) / p[0]))


@given(p=grid_and_point)
@settings(max_examples=200, deadline=None)
def test_log_identity(p):
    N, t = p
    assert hilbert.verify_log_identity(N, t) <= 1e-10


@given(p=grid_and_point)
@settings(max_examples=200, deadline=None)
def test_cot_identity(p):
    N, t = p
    assert hilbert.verify_cot_identity(N, t) <= 1e-10


def test_cot_identity_needs_full_sum():
    # dropping the j = N term leaves h cot(pi t), which is O(1)
    t = 0.37 / 16
    assert hilbert.verify_cot_identity(16, t, upper=15) > 1e-2


@pytest.mark.parametrize("N", [2, 7, 16, 33, 64])
def test_trig_quadrature_exact_below_nyquist(N):
    rng = np.random.default_rng(N)
    t = hilbert.pole_free_points(N, 50, rng)
    for n in range(-(N // 2), N // 2 + 1):
        if 2 * abs(n) >= N:
            continue
        assert np.max(hilbert.trig_quadrature_residual(TrigPoly.basis(n), N, t)) <= 1e-10


@pytest.mark.parametrize("N", [7, 8])
def test_trig_quadrature_range(N):
    # exact up to |n| = N - 1, first failure at |n| = N where e_n aliases to e_0
    t = hilbert.pole_free_points(N, 20, np.random.default_rng(0))
    res = {n: np.max(hilbert.trig_quadrature_residual(TrigPoly.basis(n), N, t)) for n in range(-N, N + 1)}
    assert max(v for n, v in res.items() if abs(n) < N) <= 1e-12
    assert res[N] > 0.5 and res[-N] > 0.5


def test_pole_free_points_margin():
    N = 40
    t = hilbert.pole_free_points(N, 1000, np.random.default_rng(1))
    frac = t * N - np.floor(t * N)
    assert frac.min() >= 0.05 and frac.max() <= 0.95
    assert np.all((t > 0) & (t < 1))


def test_poles_rejected():
    with pytest.raises(ValueError):
        hilbert.cot_kernel(1.0)
    with pytest.raises(ValueError):
        hilbert.log_sharp(0.0)
    with pytest.raises(ValueError):
        hilbert.verify_cot_identity(8, 3 / 8)


def test_hilbert_symbol():
    phi = TrigPoly({-3: 1.0, 0: 2.0, 2: 1j})
    H = phi.hilbert()
    assert H.coef == {-3: 1j, 2: 1.0}
    assert phi.degree == 3


def test_hilbert_by_quadrature():
    # p.v. integral by the trapezoid rule on a grid shifted off the singularity
    phi = TrigPoly({1: 1.0, -2: 0.5 - 0.25j})
    t0 = 0.3
    M = 4000
    tau = (np.arange(M) + 0.5) / M + t0
    approx = np.mean(1.0 / np.tan(np.pi * (t0 - tau)) * phi(tau))
    assert abs(approx - phi.hilbert()(t0)) < 1e-10


def test_derivative():
    phi = TrigPoly({3: 1.0})
    t = 0.21
    h = 1e-6
    fd = (phi(t + h) - phi(t - h)) / (2 * h)
    assert abs(phi.derivative()(t) - fd) < 1e-6


def test_piecewise_constant_fourier():
    v = np.random.default_rng(2).normal(size=12)
    f = hilbert.PiecewiseConstant(v)
    N = len(v)
    left = (np.arange(1, N + 1) - 0.5) / N
    right = left + 1.0 / N
    # cells probed through f itself, then integrated exactly
    vals = f(0.5 * (left + right))
    for mu in (-5, 3, 17):
        w = 2j * np.pi * mu
        exact = np.sum(vals * (np.exp(-w * left) - np.exp(-w * right)) / w)
        assert abs(exact - f.fourier(mu)) < 1e-13
    assert f.fourier(0) == pytest.approx(v.mean())


@pytest.mark.parametrize("N", [8, 9, 16])
def test_projection_matches_window(N):
    phi = TrigPoly({1: 1.0, -3: 0.3j, 2: -0.5})
    Dphi = hilbert.fourier_projection_Dh(phi, N)
    for mu in range(-(N // 2), N - N // 2):
        assert abs(Dphi.fourier(mu) - phi.fourier(mu)) < 1e-13


def test_averaging_delta_preserves_constants():
    np.testing.assert_allclose(hilbert.averaging_delta(np.full(7, 2.5)), 2.5)


def test_fork_weights():
    for a in (5 / 6, 1.0, 0.3):
        assert sum(hilbert.fork_weights(a)) == pytest.approx(1.0)
    assert hilbert.fork_functional(1.0, 1.0, 1.0, 1.0, 0.4) == pytest.approx(1.0)


def test_fork_orders():
    third = hilbert.consistency_order_study(5 / 6)
    reduced = hilbert.consistency_order_study(1.0)
    assert third["slope"] >= 2.9
    assert reduced["slope"] <= 1.5
    assert math.isclose(third["N"][0], 16)


def test_order_study_needs_three_levels():
    with pytest.raises(ValueError):
        hilbert.consistency_order_study(5 / 6, (16, 32))
