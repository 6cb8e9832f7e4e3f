import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elcalderon import kernels, mixing, operators
from elcalderon.geometry import Ellipse, HalfCircleArc, Kite, sample_arc, sample_closed
from elcalderon.material import DEFAULT_MATERIAL

MAT = DEFAULT_MATERIAL
S = -3j
ORACLE = json.loads((Path(__file__).parent / "data" / "traction_oracle.json").read_text())


@pytest.fixture(scope="module")
def ellipse():
    return sample_closed(Ellipse(4, 3), 24)


@pytest.fixture(scope="module")
def arc():
    return sample_arc(HalfCircleArc(1.0), 24)


def _even_odd(v):
    flip = mixing.flip_blocks(v)
    return 0.5 * (v + flip), 0.5 * (v - flip)


def test_block_layout():
    A = np.arange(6 * 8).reshape(6, 8)
    np.testing.assert_array_equal(operators.block(A, 1, 2), [[A[1, 2], A[1, 6]], [A[4, 2], A[4, 6]]])
    B = operators.matrix_to_blocks(A)
    assert B.shape == (3, 4, 2, 2)
    np.testing.assert_array_equal(operators.blocks_to_matrix(B), A)


def test_one_sided_V_entries(ellipse):
    g = ellipse
    Vp, Vm = operators.one_sided(g, S, MAT, ("V",)).V
    for i, j in ((0, 0), (5, 17), (23, 1)):
        np.testing.assert_allclose(operators.block(Vp, i, j), kernels.fundamental_E(g.m_plus[i] - g.m[j], S, MAT),
                                   rtol=1e-13)
        np.testing.assert_allclose(operators.block(Vm, i, j), kernels.fundamental_E(g.m_minus[i] - g.m[j], S, MAT),
                                   rtol=1e-13)


def test_one_sided_J_is_transposed_traction(ellipse):
    g = ellipse
    Jp, _ = operators.one_sided(g, S, MAT, ("J",)).J
    for i, j in ((0, 3), (10, 10), (20, 2)):
        ref = kernels.traction_T(g.m[j] - g.m_plus[i], g.n_plus[i], S, MAT).T
        np.testing.assert_allclose(operators.block(Jp, i, j), ref, rtol=1e-12)


def test_K_and_J_Q_placement(ellipse):
    g = ellipse
    one = operators.one_sided(g, S, MAT, ("K", "J"))
    A = operators.assemble(g, S, MAT, ("K", "J"))
    Q = mixing.matrix_Q(g.N)
    mixK = operators._mix_pm(g, *one.K)
    mixJ = operators._mix_pm(g, *one.J)
    for k in (0, 7, g.N + 3):
        e = np.zeros(2 * g.N)
        e[k] = 1.0
        np.testing.assert_allclose(A["K"] @ e, mixK @ (Q @ e), atol=1e-14)
        np.testing.assert_allclose(A["J"] @ e, Q @ (mixJ @ e), atol=1e-14)


def test_K_J_rejected_on_arc(arc):
    with pytest.raises(ValueError):
        operators.assemble_K(arc, S, MAT)
    with pytest.raises(ValueError):
        operators.assemble_J(arc, S, MAT)


def test_arc_V_kills_odd_and_returns_even(arc):
    V = operators.assemble_V(arc, S, MAT)
    rng = np.random.default_rng(4)
    v = rng.normal(size=2 * arc.N) + 1j * rng.normal(size=2 * arc.N)
    even, odd = _even_odd(v)
    scale = np.max(np.abs(V))
    assert np.max(np.abs(V @ odd)) <= 1e-12 * scale
    out = V @ v
    assert np.max(np.abs(out - mixing.flip_blocks(out))) <= 1e-12 * scale


def test_arc_W_maps_odd_to_odd(arc):
    W = operators.assemble_W(arc, S, MAT)
    rng = np.random.default_rng(5)
    v = rng.normal(size=2 * arc.N) + 1j * rng.normal(size=2 * arc.N)
    even, odd = _even_odd(v)
    scale = np.max(np.abs(W))
    assert np.max(np.abs(W @ even)) <= 1e-11 * scale
    out = W @ odd
    assert np.max(np.abs(out + mixing.flip_blocks(out))) <= 1e-11 * scale


def test_arc_incident_parity(arc):
    inc = operators.sample_incident(arc, operators.PlaneWave(MAT, S))
    b0, b1 = inc.beta0, inc.beta1
    assert np.max(np.abs(b0 - mixing.flip_blocks(b0))) <= 1e-12 * np.max(np.abs(b0))
    assert np.max(np.abs(b1 + mixing.flip_blocks(b1))) <= 1e-12 * np.max(np.abs(b1))


def test_incident_matches_direct_mixing(ellipse):
    g = ellipse
    wave = operators.PlaneWave(MAT, S)
    inc = operators.sample_incident(g, wave)
    N = g.N
    Pp, Pm = (A.dense() for A in mixing.matrix_Ppm(N))
    Q = mixing.matrix_Q(N).dense()
    u = lambda p: np.concatenate([wave.displacement(p)[:, 0], wave.displacement(p)[:, 1]])
    np.testing.assert_allclose(inc.beta0, Pp @ u(g.m_plus) + Pm @ u(g.m_minus), atol=1e-14)
    tr = lambda p, n: operators.stack_blocks(np.einsum("pij,pj->pi", wave.stress(p), n))
    np.testing.assert_allclose(inc.beta1, Q @ (Pp @ tr(g.m_plus, g.n_plus) + Pm @ tr(g.m_minus, g.n_minus)),
                               atol=1e-13)


def test_plane_wave_stress_oracle():
    wave = operators.PlaneWave(MAT, complex(*ORACLE["s"]), tuple(ORACLE["d"]))
    for row in ORACLE["plane_wave"]:
        ref = np.array([[complex(*v) for v in r] for r in row["stress"]])
        got = wave.stress(np.array(row["z"]))
        assert np.max(np.abs(got - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_plane_wave_is_harmonic_at_imaginary_s():
    wave = operators.PlaneWave(MAT, -3j, shear=False)
    z = np.array([0.4, -1.1])
    d = np.array(wave.d)
    np.testing.assert_allclose(wave.displacement(z), np.exp(3j * (z @ d) / MAT.cL) * d)


@given(alpha=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
@settings(max_examples=10, deadline=None)
def test_potentials_linear(alpha):
    g = sample_closed(Ellipse(4, 3), 12)
    z = np.array([[0.5, 0.3], [-1.0, 1.2]])
    rng = np.random.default_rng(0)
    eta = rng.normal(size=24) + 1j * rng.normal(size=24)
    S1 = operators.potential_S(g, S, MAT, z, eta)
    np.testing.assert_allclose(operators.potential_S(g, S, MAT, z, alpha * eta), alpha * S1, atol=1e-12 * (1 + abs(alpha)))
    D1 = operators.potential_D(g, S, MAT, z, eta)
    np.testing.assert_allclose(operators.potential_D(g, S, MAT, z, alpha * eta), alpha * D1, atol=1e-12 * (1 + abs(alpha)))


def test_potential_D_zero_and_Q_effect(ellipse):
    g = ellipse
    z = np.array([[0.1, 0.2], [1.5, -0.7]])
    np.testing.assert_array_equal(operators.potential_D(g, S, MAT, z, np.zeros(2 * g.N)), 0)
    psi = np.random.default_rng(1).normal(size=2 * g.N)
    raw = operators.potential_D_matrix(g, S, MAT, z, mix=False)
    np.testing.assert_allclose(operators.potential_D(g, S, MAT, z, psi).T.ravel(), raw @ (mixing.matrix_Q(g.N) @ psi),
                               atol=1e-13)


@pytest.mark.parametrize("which", ["S", "D"])
def test_potential_backends_agree(ellipse, which):
    z = np.array([[0.1, 0.2], [1.5, -0.7], [-2.0, 0.0]])
    f = operators.potential_S_matrix if which == "S" else operators.potential_D_matrix
    a = f(ellipse, 2 + 1j, MAT, z, backend="fused")
    b = f(ellipse, 2 + 1j, MAT, z, backend="numpy")
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14 * np.max(np.abs(b)))


def test_potential_near_boundary_warns(ellipse):
    z = ellipse.m[:1] * 0.999
    with pytest.warns(UserWarning):
        operators.potential_S_matrix(ellipse, S, MAT, z)


@pytest.mark.parametrize("curve", [Ellipse(4, 3), Kite()])
def test_staggering_keeps_points_apart(curve):
    for N in (16, 64, 256):
        g = sample_closed(curve, N)
        for T in (g.m_plus, g.m_minus):
            d = np.linalg.norm(T[:, None] - g.m[None], axis=-1)
            h_local = np.linalg.norm(g.n, axis=1)
            # nearest source is the own midpoint, a sixth of a panel away
            assert np.min(d / np.maximum(h_local[None], h_local[:, None])) > 0.1


def test_W_annihilates_rigid_translation_at_low_frequency():
    ratios = []
    for N in (40, 80, 160):
        g = sample_closed(Ellipse(4, 3), N)
        W = operators.assemble_W(g, 0.05, MAT)
        c = np.concatenate([np.ones(N), np.zeros(N)])
        ratios.append(np.max(np.abs(W @ c)) / np.max(np.sum(np.abs(W), axis=1)))
    assert ratios[0] < 5e-3
    assert ratios[0] > ratios[1] > ratios[2]


def test_assembly_is_deterministic(ellipse):
    a = operators.assemble(ellipse, 1 + 2j, MAT)
    b = operators.assemble(ellipse, 1 + 2j, MAT)
    for k in a:
        np.testing.assert_array_equal(a[k], b[k])


def test_rejects_left_half_plane(ellipse):
    with pytest.raises(ValueError):
        operators.assemble_V(ellipse, -1.0, MAT)


def test_matrix_dump_roundtrip(tmp_path, ellipse):
    A = operators.assemble_V(ellipse, S, MAT)
    p = tmp_path / "V.bin"
    operators.dump_matrix(p, A, ellipse.N, S, MAT)
    B, meta = operators.load_matrix(p)
    np.testing.assert_array_equal(A, B)
    assert meta["N"] == ellipse.N and meta["s"] == S and meta["mu"] == MAT.mu
    raw = p.read_bytes()
    assert raw[:4] == b"ELCM"
    p.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        operators.load_matrix(p)
