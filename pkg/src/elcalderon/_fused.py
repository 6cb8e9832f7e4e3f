"""Fused numba assembly loops.

Each loop evaluates the Bessel functions once per (target, source) pair and
writes every requested kernel straight into its ``(2 Nt, 2 Ns)`` matrix.  The
formulas mirror :mod:`elcalderon.kernels`, which stays the readable reference
and is checked against these loops in the tests.  Entries are computed
independently, so thread count does not change a single bit of the output.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .specfun import _TABLE, _radial_core

TWO_PI = 2.0 * math.pi

DO_V, DO_K, DO_J, DO_W1 = 0, 1, 2, 3

# For Re(z) above this every K_n(z) is below 1e-321: the kernel entry is an exact zero.
UNDERFLOW_RE = 740.0


@numba.njit(cache=True, inline="always")
def _zero_block(out, k, i, j, Nt, Ns):
    out[k, i, j] = 0.0
    out[k, i, Ns + j] = 0.0
    out[k, Nt + i, j] = 0.0
    out[k, Nt + i, Ns + j] = 0.0


@numba.njit(cache=True, inline="always")
def _zero_m(flags, outV, outK, outJ, outW, k, i, j, Nt, Ns):
    if flags[DO_V]:
        _zero_block(outV, k, i, j, Nt, Ns)
    if flags[DO_K]:
        _zero_block(outK, k, i, j, Nt, Ns)
    if flags[DO_J]:
        _zero_block(outJ, k, i, j, Nt, Ns)
    if flags[DO_W1]:
        _zero_block(outW, k, i, j, Nt, Ns)


@numba.njit(cache=True, parallel=True)
def _assemble_m(tp, tn, sp, sn, s, lam, mu, rho, cT, cL, flags,
                outV, outK, outJ, outW, edges, n_ang, start, centers, coef):
    """Kernels on the m-grid.  ``tp, tn``: (sides, Nt, 2); ``sp, sn``: (Ns, 2)."""
    sides, Nt = tp.shape[0], tp.shape[1]
    Ns = sp.shape[0]
    xi = cT / cL
    lm = lam / mu
    c = 1.0 / (TWO_PI * rho)
    bad = 0
    for idx in numba.prange(sides * Nt):
        k = idx // Nt
        i = idx % Nt
        x0 = tp[k, i, 0]
        x1 = tp[k, i, 1]
        v0 = tn[k, i, 0]
        v1 = tn[k, i, 1]
        for j in range(Ns):
            r0 = x0 - sp[j, 0]
            r1 = x1 - sp[j, 1]
            d2 = r0 * r0 + r1 * r1
            if d2 == 0.0:
                bad = 1
                continue
            d = math.sqrt(d2)
            z = s * d
            if z.real > UNDERFLOW_RE * cL:
                _zero_m(flags, outV, outK, outJ, outW, k, i, j, Nt, Ns)
                continue
            zi = 1.0 / z
            t0, l0, t1, d1, chi, q, hk2 = _radial_core(z, cT, cL, edges, n_ang, start, centers, coef)
            psi = t0 + cT * zi * d1
            if flags[DO_V]:
                f = 1.0 / (TWO_PI * mu)
                cc = chi / d2
                outV[k, i, j] = f * (psi - cc * r0 * r0)
                outV[k, i, Ns + j] = -f * cc * r0 * r1
                outV[k, Nt + i, j] = -f * cc * r1 * r0
                outV[k, Nt + i, Ns + j] = f * (psi - cc * r1 * r1)
            if flags[DO_K] or flags[DO_J]:
                dpsi = -t1 / cT - 2.0 * cT * zi * zi * d1 - zi * (t0 - xi * xi * l0)
                dchi = -q / (2.0 * cT)
                a1 = -s * dpsi / (TWO_PI * d)
                a2 = chi / TWO_PI
                a3 = s * dchi / TWO_PI
                for which in range(2):
                    if which == 0:
                        if not flags[DO_K]:
                            continue
                        q0 = r0
                        q1 = r1
                        n0 = sn[j, 0]
                        n1 = sn[j, 1]
                    else:
                        if not flags[DO_J]:
                            continue
                        q0 = -r0
                        q1 = -r1
                        n0 = v0
                        n1 = v1
                    rn = q0 * n0 + q1 * n1
                    e_rr = a2 * (-4.0 * rn / (d2 * d2)) + a3 * 2.0 * rn / (d2 * d)
                    e_nr = a1 + a2 / d2
                    e_rn = a1 * lm + a2 / (xi * xi * d2) + a3 * lm / d
                    e_id = a1 * rn + a2 * rn / d2
                    T00 = e_id + e_rr * q0 * q0 + e_nr * n0 * q0 + e_rn * q0 * n0
                    T01 = e_rr * q0 * q1 + e_nr * n0 * q1 + e_rn * q0 * n1
                    T10 = e_rr * q1 * q0 + e_nr * n1 * q0 + e_rn * q1 * n0
                    T11 = e_id + e_rr * q1 * q1 + e_nr * n1 * q1 + e_rn * q1 * n1
                    if which == 0:
                        outK[k, i, j] = T00
                        outK[k, i, Ns + j] = T01
                        outK[k, Nt + i, j] = T10
                        outK[k, Nt + i, Ns + j] = T11
                    else:
                        outJ[k, i, j] = T00
                        outJ[k, i, Ns + j] = T10
                        outJ[k, Nt + i, j] = T01
                        outJ[k, Nt + i, Ns + j] = T11
            if flags[DO_W1]:
                B = -c / cT * zi * d1
                A = c * zi * zi * hk2
                sa = s * s * A
                H00 = sa * r0 * r0 + B
                H01 = sa * r0 * r1
                H11 = sa * r1 * r1 + B
                w0 = sn[j, 0]
                w1 = sn[j, 1]
                # e = R ν, ẽ = R ñ with R the +90 degree rotation
                e0 = -v1
                e1 = v0
                f0 = -w1
                f1 = w0
                gT = t0 / TWO_PI
                gL = l0 / TWO_PI
                rot = 2.0 * gT * (w0 * e0 + w1 * e1)
                # ẽᵀ H R and Rᵀ H e
                p0 = f0 * H01 + f1 * H11
                p1 = -(f0 * H00 + f1 * H01)
                u0 = H00 * e0 + H01 * e1
                u1 = H01 * e0 + H11 * e1
                q0 = u1
                q1 = -u0
                pre = rho * s * s
                m2 = 2.0 * mu
                outW[k, i, j] = pre * (gL * v0 * w0 + gT * e0 * f0 + m2 * (v0 * p0 + q0 * w0))
                outW[k, i, Ns + j] = pre * (gL * v0 * w1 + gT * e0 * f1 - rot + m2 * (v0 * p1 + q0 * w1))
                outW[k, Nt + i, j] = pre * (gL * v1 * w0 + gT * e1 * f0 + rot + m2 * (v1 * p0 + q1 * w0))
                outW[k, Nt + i, Ns + j] = pre * (gL * v1 * w1 + gT * e1 * f1 + m2 * (v1 * p1 + q1 * w1))
    return bad


@numba.njit(cache=True, parallel=True)
def _assemble_w0(tp, sp, s, mu, rho, cT, cL, out, edges, n_ang, start, centers, coef):
    """``4 μ² (G1 I - H)`` on the b-grid.  ``tp``: (sides, Nt, 2); ``sp``: (Ns, 2)."""
    sides, Nt = tp.shape[0], tp.shape[1]
    Ns = sp.shape[0]
    c = 1.0 / (TWO_PI * rho)
    f = 4.0 * mu * mu
    bad = 0
    for idx in numba.prange(sides * Nt):
        k = idx // Nt
        i = idx % Nt
        for j in range(Ns):
            r0 = tp[k, i, 0] - sp[j, 0]
            r1 = tp[k, i, 1] - sp[j, 1]
            d2 = r0 * r0 + r1 * r1
            if d2 == 0.0:
                bad = 1
                continue
            z = s * math.sqrt(d2)
            if z.real > UNDERFLOW_RE * cL:
                _zero_block(out, k, i, j, Nt, Ns)
                continue
            zi = 1.0 / z
            t0, l0, t1, d1, chi, q, hk2 = _radial_core(z, cT, cL, edges, n_ang, start, centers, coef)
            G1 = c * (t0 / (cT * cT) - l0 / (cL * cL))
            B = -c / cT * zi * d1
            A = c * zi * zi * hk2
            sa = s * s * A
            out[k, i, j] = f * (G1 - sa * r0 * r0 - B)
            out[k, i, Ns + j] = -f * sa * r0 * r1
            out[k, Nt + i, j] = -f * sa * r1 * r0
            out[k, Nt + i, Ns + j] = f * (G1 - sa * r1 * r1 - B)
    return bad


_EMPTY = np.zeros((0, 0, 0), dtype=np.complex128)


def _check_s(s):
    s = complex(s)
    if s == 0 or not np.isfinite(s) or s.real < -1e-12 * abs(s):
        raise ValueError(f"frequency s={s} outside the closed right half-plane")
    return s


def m_grid(targets, tnormals, sources, snormals, s, mat, ops):
    """Dict of ``(sides, 2Nt, 2Ns)`` arrays for ``ops`` ⊂ {"V", "K", "J", "W1"}."""
    s = _check_s(s)
    targets = np.ascontiguousarray(targets, dtype=float)
    tnormals = np.ascontiguousarray(tnormals, dtype=float)
    sources = np.ascontiguousarray(sources, dtype=float)
    snormals = np.ascontiguousarray(snormals, dtype=float)
    sides, Nt = targets.shape[:2]
    Ns = sources.shape[0]
    flags = np.array([name in ops for name in ("V", "K", "J", "W1")])
    outs = [
        np.empty((sides, 2 * Nt, 2 * Ns), dtype=np.complex128) if f else _EMPTY for f in flags
    ]
    bad = _assemble_m(targets, tnormals, sources, snormals, s, mat.lam, mat.mu, mat.rho,
                      mat.cT, mat.cL, flags, *outs, *_TABLE)
    if bad:
        raise RuntimeError("coincident target and source points in assembly")
    return {name: out for name, out, f in zip(("V", "K", "J", "W1"), outs, flags) if f}


def b_grid(targets, sources, s, mat):
    s = _check_s(s)
    targets = np.ascontiguousarray(targets, dtype=float)
    sources = np.ascontiguousarray(sources, dtype=float)
    sides, Nt = targets.shape[:2]
    out = np.empty((sides, 2 * Nt, 2 * sources.shape[0]), dtype=np.complex128)
    bad = _assemble_w0(targets, sources, s, mat.mu, mat.rho, mat.cT, mat.cL, out, *_TABLE)
    if bad:
        raise RuntimeError("coincident target and source points in assembly")
    return out
