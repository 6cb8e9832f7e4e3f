"""Matrix-valued kernels of the elastic Calderón calculus.

All functions broadcast over leading dimensions: separation vectors ``r`` and
normals have shape ``(..., 2)`` and results have shape ``(..., 2, 2)``.  The
tensor product is ``(a ⊗ b)_{ij} = a_i b_j``.

Assembly code usually evaluates several kernels at the same separations;
passing a precomputed :class:`~elcalderon.specfun.RadialFamily` as ``fam``
avoids repeating the Bessel sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .specfun import RadialFamily

I2 = np.eye(2)


@dataclass(frozen=True)
class W1Options:
    """Choice of smooth hypersingular part ``W_1``.

    ``form="derived"`` (default) is the kernel obtained by integrating the
    traction of the double layer by parts; it passes the Calderón and
    duality checks.  ``form="printed"`` is an alternative expression that fails those checks,
    kept for comparison; ``scalar_m`` and ``bare_s`` select readings of two
    ambiguous terms in it.  ``scalar_m="rr"`` takes ``M = (r·ñ)(r·n)`` and
    ``"r2nn"`` takes ``|r|^2 (ñ·n)``; ``bare_s`` keeps the lone ``s`` on
    ``μ² n ⊗ ñ`` inside the ``B`` bracket.
    """

    form: str = "derived"
    scalar_m: str = "rr"
    bare_s: bool = False

    def __post_init__(self):
        if self.form not in ("derived", "printed"):
            raise ValueError(f"unknown W1 form {self.form!r}")
        if self.scalar_m not in ("rr", "r2nn"):
            raise ValueError(f"unknown scalar_m strategy {self.scalar_m!r}")


DEFAULT_W1 = W1Options()

#: Rotation by +90 degrees; ``R n`` is the tangent when ``n`` is the outward normal.
ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def outer(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., :, None] * b[..., None, :]


def dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _norm(r):
    r = np.asarray(r, dtype=float)
    rr = np.sqrt(dot(r, r))
    if np.any(rr == 0):
        raise ValueError("kernel evaluated at zero separation")
    return r, rr


def radial_family(r, s, mat, with_g=True):
    _, rr = _norm(r)
    return RadialFamily(s * rr, mat, with_g=with_g)


def _fam(r, s, mat, fam, with_g):
    return fam if fam is not None else radial_family(r, s, mat, with_g=with_g)


def fundamental_E(r, s, mat, fam=None):
    """``(ψ(s r) I - χ(s r) r ⊗ r / r²) / (2π μ)``."""
    r, rr = _norm(r)
    fam = _fam(r, s, mat, fam, False)
    out = fam.psi[..., None, None] * I2 - (fam.chi / rr**2)[..., None, None] * outer(r, r)
    return out / (2.0 * math.pi * mat.mu)


def traction_T(r, n, s, mat, fam=None):
    """Double-layer kernel ``T(r, n; s)``."""
    r, rr = _norm(r)
    n = np.asarray(n, dtype=float)
    fam = _fam(r, s, mat, fam, False)
    lm = mat.lam / mat.mu
    rn = dot(r, n)[..., None, None]
    r_ = rr[..., None, None]
    nr = outer(n, r)
    rn_out = outer(r, n)
    rr_out = outer(r, r)
    t1 = (-s * fam.dpsi / (2.0 * math.pi * rr))[..., None, None] * (rn * I2 + nr + lm * rn_out)
    t2 = (fam.chi / (2.0 * math.pi))[..., None, None] * (
        -4.0 * rn / r_**4 * rr_out + nr / r_**2 + rn / r_**2 * I2 + rn_out / (mat.xi**2 * r_**2)
    )
    t3 = (s / (2.0 * math.pi) * fam.dchi)[..., None, None] * (
        2.0 * rn / r_**3 * rr_out + lm / r_ * rn_out
    )
    return t1 + t2 + t3


def matrix_H(r, s, mat, fam=None):
    """``s² A(s r) r ⊗ r + B(s r) I``."""
    r, _ = _norm(r)
    fam = _fam(r, s, mat, fam, True)
    return (s**2 * fam.A)[..., None, None] * outer(r, r) + fam.B[..., None, None] * I2


def hyp_W0(r, s, mat, fam=None, printed=False):
    """Kernel of the tangential-derivative part, ``4 μ² (G_1(s r) I - H(r; s))``.

    As s -> 0 this tends to the classical static kernel
    ``μ(λ+μ)/(π(λ+2μ)) (-log r I + r̂ ⊗ r̂)`` up to constants.  ``printed=True``
    gives the literal ``4 μ² G_1 I - H``, which mixes units.
    """
    fam = _fam(r, s, mat, fam, True)
    G1 = fam.G1[..., None, None] * I2
    H = matrix_H(r, s, mat, fam)
    if printed:
        return 4.0 * mat.mu**2 * G1 - H
    return 4.0 * mat.mu**2 * (G1 - H)


def matrix_bold_M(r, n, nt):
    """``(ñ ⊗ n)(r ⊗ r) + (r ⊗ r)(ñ ⊗ n)``."""
    A = outer(nt, n)
    R = outer(r, r)
    return A @ R + R @ A


def scalar_M(r, n, nt, strategy="rr"):
    if strategy == "rr":
        return dot(r, nt) * dot(r, n)
    if strategy == "r2nn":
        return dot(r, r) * dot(n, nt)
    raise ValueError(f"unknown scalar_m strategy {strategy!r}")


def scalar_M_and_matrix_M(r, n, nt, strategy="rr"):
    return scalar_M(r, n, nt, strategy), matrix_bold_M(r, n, nt)


def hyp_W1(r, n, nt, s, mat, fam=None, options: W1Options = None):
    """Smooth part ``W_1(r, n, ñ; s)`` of the regularized hypersingular kernel.

    ``n`` is the (scaled) target normal, ``ñ`` the (scaled) source normal.
    """
    options = options or DEFAULT_W1
    if options.form == "printed":
        return _hyp_W1_printed(r, n, nt, s, mat, fam, options)
    r, _ = _norm(r)
    n = np.asarray(n, dtype=float)
    nt = np.asarray(nt, dtype=float)
    fam = _fam(r, s, mat, fam, True)
    x = lambda a: a[..., None, None]  # noqa: E731
    t = n @ ROT.T
    tt = nt @ ROT.T
    gT = fam.k0T / (2.0 * math.pi)
    gL = fam.k0L / (2.0 * math.pi)
    H = matrix_H(r, s, mat, fam)
    out = x(gL) * outer(n, nt) + x(gT) * outer(t, tt) + 2.0 * x(gT * dot(nt, t)) * ROT
    out = out + 2.0 * mat.mu * (outer(n, tt) @ H @ ROT + ROT.T @ H @ outer(t, nt))
    return mat.rho * s**2 * out


def _hyp_W1_printed(r, n, nt, s, mat, fam, options):
    r, _ = _norm(r)
    n = np.asarray(n, dtype=float)
    nt = np.asarray(nt, dtype=float)
    fam = _fam(r, s, mat, fam, True)
    lam, mu = mat.lam, mat.mu
    e = lambda a: a[..., None, None]  # noqa: E731

    ntn = outer(nt, n)
    nnt = outer(n, nt)
    dn = e(dot(nt, n))
    sM = e(scalar_M(r, n, nt, options.scalar_m))
    lone = s if options.bare_s else 1.0

    first = e(mu * fam.G2) * (lam * ntn + mu * nnt + mu * dn * I2)
    inner = (
        e(lam**2 * fam.G1) * ntn
        + e(s**2 * fam.A) * (2 * lam * mu * matrix_bold_M(r, n, nt) + mu**2 * sM * I2 + mu**2 * matrix_bold_M(r, nt, n))
        + e(fam.B) * (4 * lam * mu * ntn + mu**2 * dn * I2 + mu**2 * lone * nnt)
        + mu**2 * dn * matrix_H(r, s, mat, fam)
    )
    return (lam + 2 * mu) / (lam + mu) * s**2 * (first - inner / mat.cL**2)
