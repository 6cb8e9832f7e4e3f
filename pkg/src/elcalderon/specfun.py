"""Macdonald functions K_0..K_3 of complex argument and the radial kernel families.

``K_0`` and ``K_1`` are evaluated by one of three schemes depending on
``|z|``:

* ``|z| <= 1``: ascending series.
* ``1 < |z| < 25``: Taylor patches of ``K_0`` and ``K_1`` on a polar grid
  covering the closed right half-plane (geometric rings up to ``|z| ~ 10``,
  linear rings beyond).  Patch coefficients come from
  ``K_0..K_{n}`` at the patch centre (Steed's continued fraction for ``K_0``
  and ``K_1``, then upward recurrence) via
  ``K_nu^{(k)} = (-1/2)^k sum_j C(k, j) K_{nu - k + 2j}``.  Every evaluation
  point is within ``min(0.1 |c|, 1)`` of its centre ``c``.
* ``|z| >= 25``: Hankel's asymptotic expansion.

``K_2`` and ``K_3`` follow by upward recurrence, which is stable for
Macdonald functions.  The domain is ``Re z >= 0``, ``z != 0``.
"""

from __future__ import annotations

import cmath
import math
from math import comb, factorial

import numba
import numpy as np

EULER_GAMMA = 0.57721566490153286061

SERIES_RADIUS = 1.0
ASYMPTOTIC_RADIUS = 25.0
MIN_ABS_ARGUMENT = 1e-14

_PATCH_STEP = 0.135
_PATCH_WIDTH = 1.35
_PATCH_TERMS = 19
_ANGLE_MIN = -0.5 * math.pi - 0.1
_ANGLE_SPAN = math.pi + 0.2


def _ring_edges():
    # Geometric rings while cells are narrower than _PATCH_WIDTH, linear after;
    # every cell then has half-diagonal below min(0.1 |c|, 1).
    edges = [SERIES_RADIUS]
    while edges[-1] < ASYMPTOTIC_RADIUS:
        r = edges[-1]
        edges.append(r * math.exp(_PATCH_STEP) if r * _PATCH_STEP < _PATCH_WIDTH else r + _PATCH_WIDTH)
    return np.array(edges)


@numba.njit(cache=True, inline="always")
def _abs2(z):
    return z.real * z.real + z.imag * z.imag


@numba.njit(cache=True)
def _k01_series(z):
    y = 0.25 * z * z
    lg = cmath.log(0.5 * z)
    term0 = 1.0 + 0j
    term1 = 1.0 + 0j
    i0 = 0j
    i1 = 0j
    s0 = 0j
    s1 = 0j
    psi1 = -EULER_GAMMA
    for k in range(60):
        if k > 0:
            term0 = term0 * y * (1.0 / (k * k))
            term1 = term1 * y * (1.0 / (k * (k + 1)))
            psi1 += 1.0 / k
        psi2 = psi1 + 1.0 / (k + 1)
        i0 += term0
        i1 += term1
        s0 += psi1 * term0
        s1 += (psi1 + psi2) * term1
        if k > 2 and _abs2(term0) < 1e-36 * _abs2(i0):
            break
    k0 = -lg * i0 + s0
    k1 = 1.0 / z + lg * (0.5 * z * i1) - 0.25 * z * s1
    return k0, k1


@numba.njit(cache=True)
def _k01_asymptotic(z, scaled):
    zi = 1.0 / z
    pref = cmath.sqrt(math.pi / (2.0 * z))
    if not scaled:
        pref = pref * cmath.exp(-z)
    t0 = 1.0 + 0j
    t1 = 1.0 + 0j
    a0 = 1.0 + 0j
    a1 = 1.0 + 0j
    for k in range(1, 60):
        odd = (2 * k - 1) ** 2
        t0 = t0 * zi * (-odd / (8.0 * k))
        t1 = t1 * zi * ((4.0 - odd) / (8.0 * k))
        a0 += t0
        a1 += t1
        if _abs2(t0) < 1e-34 and _abs2(t1) < 1e-34:
            break
    return pref * a0, pref * a1


@numba.njit(cache=True)
def _k01_steed(z):
    # Continued fraction CF2 (Steed/Temme) for nu = 0; seeds the patch table.
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    h = d
    delh = d
    q1 = 0j
    q2 = 1.0 + 0j
    a1 = 0.25
    q = a1 + 0j
    c = a1 + 0j
    a = -a1 + 0j
    s = 1.0 + q * delh
    for i in range(1, 5000):
        a -= 2 * i
        c = -a * c / (i + 1.0)
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels) < 1e-17 * abs(s):
            break
    k0 = cmath.sqrt(math.pi / (2.0 * z)) * cmath.exp(-z) / s
    k1 = k0 * (z + 0.5 - a1 * h) / z
    return k0, k1


def _build_patches():
    edges = _ring_edges()
    n_ang = np.empty(edges.size - 1, dtype=np.int64)
    for ir in range(edges.size - 1):
        dtheta = min(_PATCH_STEP, _PATCH_WIDTH / edges[ir + 1])
        n_ang[ir] = int(math.ceil(_ANGLE_SPAN / dtheta))
    start = np.concatenate(([0], np.cumsum(n_ang))).astype(np.int64)
    centers = np.empty(start[-1], dtype=np.complex128)
    coef = np.empty((start[-1], 2, _PATCH_TERMS), dtype=np.complex128)
    nmax = _PATCH_TERMS + 2
    for ir in range(edges.size - 1):
        rad = 0.5 * (edges[ir] + edges[ir + 1])
        for it in range(n_ang[ir]):
            ang = _ANGLE_MIN + (it + 0.5) * _ANGLE_SPAN / n_ang[ir]
            c = rad * cmath.exp(1j * ang)
            p = start[ir] + it
            centers[p] = c
            kn = [0j] * (nmax + 1)
            # CF2 converges poorly for small |c| off the real axis.
            kn[0], kn[1] = _k01_series(c) if rad < 2.0 else _k01_steed(c)
            for n in range(1, nmax):
                kn[n + 1] = kn[n - 1] + 2.0 * n / c * kn[n]
            for nu in (0, 1):
                for k in range(_PATCH_TERMS):
                    acc = 0j
                    for j in range(k + 1):
                        acc += comb(k, j) * kn[abs(nu - k + 2 * j)]
                    coef[p, nu, k] = (-0.5) ** k * acc / factorial(k)
    return edges, n_ang, start, centers, coef


_EDGES, _NANG, _START, _CENTERS, _COEF = _build_patches()
_N_GEOM = int(np.argmax(np.abs(np.diff(_EDGES) - _PATCH_WIDTH) < 1e-12))
_GEOM_TOP = float(_EDGES[_N_GEOM])
_TABLE = (_EDGES, _NANG, _START, _CENTERS, _COEF)


@numba.njit(cache=True)
def _k01_patch(z, edges, n_ang, start, centers, coef):
    az = abs(z)
    # Geometric rings below _GEOM_TOP, linear above; fix rounding by one step.
    if az < _GEOM_TOP:
        ir = int(math.log(az / SERIES_RADIUS) / _PATCH_STEP)
    else:
        ir = _N_GEOM + int((az - _GEOM_TOP) / _PATCH_WIDTH)
    if ir >= n_ang.size:
        ir = n_ang.size - 1
    while ir > 0 and edges[ir] > az:
        ir -= 1
    while ir < n_ang.size - 1 and edges[ir + 1] <= az:
        ir += 1
    it = int((cmath.phase(z) - _ANGLE_MIN) / _ANGLE_SPAN * n_ang[ir])
    if it < 0:
        it = 0
    if it >= n_ang[ir]:
        it = n_ang[ir] - 1
    p = start[ir] + it
    d = z - centers[p]
    k0 = 0j
    k1 = 0j
    for k in range(coef.shape[2] - 1, -1, -1):
        k0 = k0 * d + coef[p, 0, k]
        k1 = k1 * d + coef[p, 1, k]
    return k0, k1


@numba.njit(cache=True)
def _k01(z, scaled, edges, n_ang, start, centers, coef):
    az = abs(z)
    if az >= ASYMPTOTIC_RADIUS:
        return _k01_asymptotic(z, scaled)
    if az <= SERIES_RADIUS:
        k0, k1 = _k01_series(z)
    else:
        k0, k1 = _k01_patch(z, edges, n_ang, start, centers, coef)
    if scaled:
        e = cmath.exp(z)
        k0 *= e
        k1 *= e
    return k0, k1


@numba.njit(cache=True)
def _k0123_flat(z, scaled, edges, n_ang, start, centers, coef, out):
    for i in range(z.size):
        zi = z[i]
        k0, k1 = _k01(zi, scaled, edges, n_ang, start, centers, coef)
        k2 = k0 + 2.0 / zi * k1
        out[0, i] = k0
        out[1, i] = k1
        out[2, i] = k2
        out[3, i] = k1 + 4.0 / zi * k2


@numba.njit(cache=True)
def _k012_regular_series(z):
    # K0, K1 - 1/z and K2 - 2/z^2 + 1/2 from the ascending series, without
    # forming the pole terms.
    y = 0.25 * z * z
    lg = cmath.log(0.5 * z)
    term0 = 1.0 + 0j
    term1 = 1.0 + 0j
    term2 = 0.5 + 0j
    i0 = i1 = i2 = s0 = s1 = s2 = 0j
    psi1 = -EULER_GAMMA
    for k in range(60):
        if k > 0:
            term0 = term0 * y * (1.0 / (k * k))
            term1 = term1 * y * (1.0 / (k * (k + 1)))
            term2 = term2 * y * (1.0 / (k * (k + 2)))
            psi1 += 1.0 / k
        psi2 = psi1 + 1.0 / (k + 1)
        psi3 = psi2 + 1.0 / (k + 2)
        i0 += term0
        i1 += term1
        i2 += term2
        s0 += psi1 * term0
        s1 += (psi1 + psi2) * term1
        s2 += (psi1 + psi3) * term2
        if k > 2 and _abs2(term0) < 1e-36 * _abs2(i0):
            break
    k0 = -lg * i0 + s0
    k1r = lg * (0.5 * z * i1) - 0.25 * z * s1
    k2r = y * (0.5 * s2 - lg * i2)
    return k0, k1r, k2r


@numba.njit(cache=True)
def _radial_core(z, cT, cL, edges, n_ang, start, centers, coef):
    """``K0(z/cT), K0(z/cL), K1(z/cT)`` and the transverse-minus-pressure combinations

    ``d1 = t1 - xi l1``, ``chi = t2 - xi^2 l2``, ``q = t1 + t3 - xi^3 (l1 + l3)``,
    ``a2 = t2/cT^2 - l2/cL^2`` (``t_n = K_n(z/cT)``, ``l_n = K_n(z/cL)``).

    Their pole terms cancel exactly, so for small ``|z|`` they are built from
    the regular series parts instead of by subtraction.
    """
    xi = cT / cL
    wT = z / cT
    wL = z / cL
    if abs(wT) <= SERIES_RADIUS:
        t0, t1r, t2r = _k012_regular_series(wT)
        l0, l1r, l2r = _k012_regular_series(wL)
        x3 = xi * xi * xi
        d1 = t1r - xi * l1r
        chi = t2r - xi * xi * l2r - 0.5 * (1.0 - xi * xi)
        q = 2.0 * (t1r - x3 * l1r) + 4.0 * (cT * t2r - x3 * cL * l2r) / z
        a2 = t2r / (cT * cT) - l2r / (cL * cL) - 0.5 * (1.0 / (cT * cT) - 1.0 / (cL * cL))
        return t0, l0, 1.0 / wT + t1r, d1, chi, q, a2
    t0, t1 = _k01(wT, False, edges, n_ang, start, centers, coef)
    l0, l1 = _k01(wL, False, edges, n_ang, start, centers, coef)
    t2 = t0 + 2.0 / wT * t1
    l2 = l0 + 2.0 / wL * l1
    t3 = t1 + 4.0 / wT * t2
    l3 = l1 + 4.0 / wL * l2
    d1 = t1 - xi * l1
    chi = t2 - xi * xi * l2
    q = t1 + t3 - xi * xi * xi * (l1 + l3)
    a2 = t2 / (cT * cT) - l2 / (cL * cL)
    return t0, l0, t1, d1, chi, q, a2


@numba.njit(cache=True)
def _radial_core_flat(z, cT, cL, edges, n_ang, start, centers, coef, out):
    for i in range(z.size):
        r = _radial_core(z[i], cT, cL, edges, n_ang, start, centers, coef)
        for n in range(7):
            out[n, i] = r[n]


def radial_core(z, mat):
    """Vectorised :func:`_radial_core`: tuple ``(t0, l0, t1, d1, chi, q, a2)``."""
    z = np.asarray(z, dtype=np.complex128)
    _check_domain(z / mat.cT)
    flat = np.ascontiguousarray(z).ravel()
    out = np.empty((7, flat.size), dtype=np.complex128)
    _radial_core_flat(flat, mat.cT, mat.cL, *_TABLE, out)
    return tuple(out[n].reshape(z.shape) for n in range(7))


def _check_domain(z):
    az = np.abs(z)
    if np.any(~np.isfinite(z)):
        raise ValueError("bessel_k: non-finite argument")
    if np.any(az < MIN_ABS_ARGUMENT):
        raise ValueError("bessel_k: |z| below 1e-14 (evaluation at a coincident point?)")
    # Tolerate rounding noise on the imaginary axis.
    if np.any(z.real < -1e-12 * az):
        raise ValueError("bessel_k: argument in the left half-plane")


def bessel_k0123(z, scaled=False):
    """Return ``K_0(z), K_1(z), K_2(z), K_3(z)`` as a tuple of arrays shaped like ``z``.

    With ``scaled=True`` every value is multiplied by ``exp(z)``.
    """
    z = np.asarray(z, dtype=np.complex128)
    _check_domain(z)
    flat = np.ascontiguousarray(z).ravel()
    out = np.empty((4, flat.size), dtype=np.complex128)
    _k0123_flat(flat, scaled, *_TABLE, out)
    return tuple(out[n].reshape(z.shape) for n in range(4))


def bessel_k(n: int, z, scaled: bool = False):
    """Macdonald function ``K_n(z)`` for ``n`` in ``0..3`` and ``Re z >= 0``."""
    if n not in (0, 1, 2, 3):
        raise ValueError(f"bessel_k supports orders 0..3, got {n!r}")
    scalar = np.ndim(z) == 0
    val = bessel_k0123(z, scaled)[n]
    return complex(val) if scalar else val


# ---------------------------------------------------------------------------
# Radial functions of the elastic kernels.  All take the complex argument
# z = s r; `mat` needs cT, cL, xi and rho (and mu for nothing here).
# ---------------------------------------------------------------------------


def _k_both(z, mat):
    z = np.asarray(z, dtype=np.complex128)
    return bessel_k0123(z / mat.cT), bessel_k0123(z / mat.cL)


def _radial(z, mat, name):
    val = getattr(RadialFamily(z, mat, with_g=False), name)
    return complex(val) if np.ndim(z) == 0 else val


def psi(z, mat):
    """``K0(z/cT) + (cT/z) (K1(z/cT) - xi K1(z/cL))``."""
    return _radial(z, mat, "psi")


def chi(z, mat):
    """``K2(z/cT) - xi^2 K2(z/cL)``."""
    return _radial(z, mat, "chi")


def psi_prime(z, mat):
    return _radial(z, mat, "dpsi")


def chi_prime(z, mat):
    return _radial(z, mat, "dchi")


def G_derivs(z, mat):
    """``(G, G', G'', G''', G'''')`` with ``G = (K0(z/cT) - K0(z/cL)) / (2 pi rho)``."""
    (t0, t1, t2, t3), (l0, l1, l2, l3) = _k_both(z, mat)
    return _g_family(z, mat, t0, t1, t2, t3, l0, l1, l2, l3)


def _g_family(z, mat, t0, t1, t2, t3, l0, l1, l2, l3):
    cT, cL, xi, rho = mat.cT, mat.cL, mat.xi, mat.rho
    c = 1.0 / (2.0 * math.pi * rho)
    g0 = c * (t0 - l0)
    g1 = -c / cT * (t1 - xi * l1)
    g2 = 0.5 * c / cT**2 * (t0 + t2 - xi**2 * (l0 + l2))
    g3 = -0.25 * c / cT**3 * (3.0 * t1 + t3 - xi**3 * (3.0 * l1 + l3))
    z2 = z * z
    g4 = c / cT**4 * ((3.0 * cT**2 / z2 + 1.0) * t2 - xi**4 * (3.0 * cL**2 / z2 + 1.0) * l2)
    return g0, g1, g2, g3, g4


def regularizer_funcs(z, mat):
    """``(G1, G2, A, B)``: radial Laplacian and bi-Laplacian of ``G`` plus
    ``A = G''/z^2 - G'/z^3`` and ``B = G'/z``."""
    _, g1, g2, g3, g4 = G_derivs(z, mat)
    return _regularizers(z, g1, g2, g3, g4)


def _regularizers(z, g1, g2, g3, g4):
    zi = 1.0 / z
    G1 = zi * g1 + g2
    G2 = g4 + 2.0 * zi * g3 - zi**2 * g2 + zi**3 * g1
    A = zi**2 * g2 - zi**3 * g1
    B = zi * g1
    return G1, G2, A, B


class RadialFamily:
    """All radial scalars needed by the kernels, from one Bessel sweep.

    Attributes are arrays shaped like ``z``: ``psi, chi, dpsi, dchi`` and
    ``G1, G2, A, B``.  The G-family is only computed when ``with_g`` is set.
    """

    def __init__(self, z, mat, with_g=True):
        z = np.asarray(z, dtype=np.complex128)
        t0, l0, t1, d1, chi, q, a2 = radial_core(z, mat)
        cT, cL, xi = mat.cT, mat.cL, mat.xi
        zi = 1.0 / z
        self.z = z
        self.k0T = t0
        self.k0L = l0
        self.psi = t0 + cT * zi * d1
        self.chi = chi
        self.dpsi = -t1 / cT - 2.0 * cT * zi**2 * d1 - zi * (t0 - xi**2 * l0)
        self.dchi = -q / (2.0 * cT)
        if with_g:
            # K0(z/c) solves the radial modified Helmholtz equation, so G1, G2 and
            # G'' - G'/z reduce to plain K0 and K2 combinations.  The derivative
            # chain of regularizer_funcs loses ~|z|^-4 relative accuracy near the diagonal.
            c = 1.0 / (2.0 * math.pi * mat.rho)
            self.G1 = c * (t0 / cT**2 - l0 / cL**2)
            self.G2 = c * (t0 / cT**4 - l0 / cL**4)
            self.B = -c / cT * zi * d1
            self.A = c * zi**2 * a2
