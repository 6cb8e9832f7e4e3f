"""Discrete boundary integral operators, layer potentials and incident-wave sampling.

Matrices are dense ``(2 N_rows) x (2 N_cols)`` complex arrays in the block
layout of :mod:`elcalderon.mixing`: block ``(i, j)`` occupies rows
``i, i + N_rows`` and columns ``j, j + N_cols``.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _fused, kernels
from .geometry import ARC, GridData
from .mixing import matrix_D, matrix_Ppm, matrix_Q
from .specfun import RadialFamily


def blocks_to_matrix(B):
    """``(Nt, Ns, 2, 2)`` block array to a ``(2 Nt, 2 Ns)`` matrix."""
    Nt, Ns = B.shape[:2]
    return B.transpose(2, 0, 3, 1).reshape(2 * Nt, 2 * Ns)


def matrix_to_blocks(A):
    Nt, Ns = A.shape[0] // 2, A.shape[1] // 2
    return A.reshape(2, Nt, 2, Ns).transpose(1, 3, 0, 2)


def block(A, i, j):
    """2x2 block ``A_ij`` (0-based)."""
    Nt, Ns = A.shape[0] // 2, A.shape[1] // 2
    return A[np.ix_([i, i + Nt], [j, j + Ns])]


def _separations(targets, sources):
    r = targets[..., :, None, :] - sources[None, :, :]
    dist = np.sqrt(np.einsum("...k,...k->...", r, r))
    if np.any(dist == 0):
        raise RuntimeError("coincident target and source points in assembly")
    return r, dist


def _mixers(grid):
    P_plus, P_minus = matrix_Ppm(grid.N, grid.offsets)
    return P_plus, P_minus


def _mix_pm(grid, plus, minus):
    P_plus, P_minus = _mixers(grid)
    return P_plus.apply(plus) + P_minus.apply(minus)


def _require_closed(grid, name):
    if grid.kind == ARC:
        raise ValueError(f"{name} is not defined on open arcs")


@dataclass
class OneSided:
    """One-sided matrices ``(plus, minus)`` keyed by operator name."""

    V: tuple = None
    K: tuple = None
    J: tuple = None
    W0: tuple = None
    W1: tuple = None


def one_sided(grid: GridData, s, mat, ops=("V", "K", "J", "W0", "W1"), w1_options=None,
              backend="fused") -> OneSided:
    """Assemble the requested one-sided matrices, sharing one Bessel sweep per grid.

    ``backend="numpy"`` evaluates the reference kernels of :mod:`elcalderon.kernels`;
    it is slower and is also the only path for non-default ``w1_options``.
    """
    ops = set(ops)
    if ops & {"K", "J"}:
        _require_closed(grid, "K/J")
    if w1_options is not None and w1_options != kernels.DEFAULT_W1:
        backend = "numpy"
    if backend == "numpy":
        return _one_sided_numpy(grid, s, mat, ops, w1_options)
    if backend != "fused":
        raise ValueError(f"unknown backend {backend!r}")
    out = OneSided()
    m_ops = ops & {"V", "K", "J", "W1"}
    if m_ops:
        targets = np.stack([grid.m_plus, grid.m_minus])
        tnormals = np.stack([grid.n_plus, grid.n_minus])
        mats = _fused.m_grid(targets, tnormals, grid.m, grid.n, s, mat, m_ops)
        for name, A in mats.items():
            setattr(out, name, (A[0], A[1]))
    if "W0" in ops:
        A = _fused.b_grid(np.stack([grid.b_plus, grid.b_minus]), grid.b, s, mat)
        out.W0 = (A[0], A[1])
    return out


def _one_sided_numpy(grid, s, mat, ops, w1_options):
    out = OneSided()
    if ops & {"V", "K", "J", "W1"}:
        targets = np.stack([grid.m_plus, grid.m_minus])
        r, dist = _separations(targets, grid.m)
        fam = RadialFamily(s * dist, mat, with_g="W1" in ops)
        if "V" in ops:
            Eb = kernels.fundamental_E(r, s, mat, fam)
            out.V = tuple(blocks_to_matrix(Eb[k]) for k in range(2))
        if "K" in ops:
            Tb = kernels.traction_T(r, np.broadcast_to(grid.n[None, None], r.shape), s, mat, fam)
            out.K = tuple(blocks_to_matrix(Tb[k]) for k in range(2))
        if "J" in ops:
            nt = np.stack([grid.n_plus, grid.n_minus])[:, :, None, :]
            Tb = kernels.traction_T(-r, np.broadcast_to(nt, r.shape), s, mat, fam)
            out.J = tuple(blocks_to_matrix(np.swapaxes(Tb[k], -1, -2)) for k in range(2))
        if "W1" in ops:
            nt = np.stack([grid.n_plus, grid.n_minus])[:, :, None, :]
            Wb = kernels.hyp_W1(
                r, np.broadcast_to(nt, r.shape), np.broadcast_to(grid.n[None, None], r.shape),
                s, mat, fam, w1_options,
            )
            out.W1 = tuple(blocks_to_matrix(Wb[k]) for k in range(2))
    if "W0" in ops:
        targets = np.stack([grid.b_plus, grid.b_minus])
        r, dist = _separations(targets, grid.b)
        fam = RadialFamily(s * dist, mat, with_g=True)
        Wb = kernels.hyp_W0(r, s, mat, fam)
        out.W0 = tuple(blocks_to_matrix(Wb[k]) for k in range(2))
    return out




def assemble(grid: GridData, s, mat, ops=("V", "K", "J", "W"), w1_options=None, backend="fused") -> dict:
    """Mixed operators ``V_h, K_h, J_h, W_h`` for the requested names."""
    ops = tuple(ops)
    raw = []
    for name in ops:
        raw += {"V": ["V"], "K": ["K"], "J": ["J"], "W": ["W0", "W1"]}[name]
    one = one_sided(grid, s, mat, raw, w1_options, backend)
    Q = matrix_Q(grid.N, grid.offsets)
    out = {}
    if "V" in ops:
        out["V"] = _mix_pm(grid, *one.V)
    if "K" in ops:
        out["K"] = _mix_pm(grid, *one.K) @ Q
    if "J" in ops:
        out["J"] = Q @ _mix_pm(grid, *one.J)
    if "W" in ops:
        D = matrix_D(grid.N, grid.offsets)
        out["W"] = D @ (_mix_pm(grid, *one.W0) @ D.T) + Q @ (_mix_pm(grid, *one.W1) @ Q)
    return out


def assemble_V(grid, s, mat):
    return assemble(grid, s, mat, ("V",))["V"]


def assemble_K(grid, s, mat):
    return assemble(grid, s, mat, ("K",))["K"]


def assemble_J(grid, s, mat):
    return assemble(grid, s, mat, ("J",))["J"]


def assemble_W(grid, s, mat, w1_options=None):
    return assemble(grid, s, mat, ("W",), w1_options)["W"]


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


def _observation_separations(grid, z):
    z = np.atleast_2d(np.asarray(z, dtype=float))
    r, dist = _separations(z, grid.m)
    spacing = np.mean(np.linalg.norm(grid.n, axis=1))
    if np.min(dist) < 0.5 * spacing:
        warnings.warn("potential evaluated within h/2 of the boundary; accuracy degrades", stacklevel=3)
    return z, r, dist


def potential_S_matrix(grid, s, mat, z, backend="fused"):
    """``(2P, 2N)`` matrix of ``S_h(s; z)`` on observation points ``z`` of shape ``(P, 2)``."""
    z, r, dist = _observation_separations(grid, z)
    if backend == "fused":
        return _fused.m_grid(z[None], np.zeros((1,) + z.shape), grid.m, grid.n, s, mat, {"V"})["V"][0]
    fam = RadialFamily(s * dist, mat, with_g=False)
    return blocks_to_matrix(kernels.fundamental_E(r, s, mat, fam))


def potential_D_matrix(grid, s, mat, z, mix=True, backend="fused"):
    """Matrix of ``D_h(s; z)``; with ``mix=False`` the ``Q`` factor is omitted."""
    z, r, dist = _observation_separations(grid, z)
    if backend == "fused":
        A = _fused.m_grid(z[None], np.zeros((1,) + z.shape), grid.m, grid.n, s, mat, {"K"})["K"][0]
    else:
        fam = RadialFamily(s * dist, mat, with_g=False)
        A = blocks_to_matrix(kernels.traction_T(r, np.broadcast_to(grid.n[None], r.shape), s, mat, fam))
    return A @ matrix_Q(grid.N, grid.offsets) if mix else A


def _fold(values):
    # (2P,) -> (P, 2)
    values = np.asarray(values)
    return values.reshape(2, -1).T


def potential_S(grid, s, mat, z, eta):
    """``sum_j E(z - m_j; s) eta_j`` as an array of shape ``(P, 2)``."""
    return _fold(potential_S_matrix(grid, s, mat, z) @ eta)


def potential_D(grid, s, mat, z, psi):
    """``sum_j T(z - m_j, n_j; s) (Q psi)_j`` as an array of shape ``(P, 2)``."""
    return _fold(potential_D_matrix(grid, s, mat, z) @ psi)


# ---------------------------------------------------------------------------
# Incident waves
# ---------------------------------------------------------------------------


def stack_blocks(values):
    """``(N, 2)`` point values to a length-``2N`` density vector."""
    values = np.asarray(values)
    return np.concatenate([values[:, 0], values[:, 1]])


def unstack_blocks(v):
    return _fold(v)


def stress_from_gradient(grad, mat):
    """``σ = μ (∇U + ∇Uᵀ) + λ tr(∇U) I`` for ``grad[..., i, j] = ∂_j U_i``."""
    tr = np.trace(grad, axis1=-2, axis2=-1)
    return mat.mu * (grad + np.swapaxes(grad, -1, -2)) + mat.lam * tr[..., None, None] * np.eye(2)


@dataclass(frozen=True)
class PlaneWave:
    """``e^{-s z·d/cL} d`` (pressure) plus ``e^{-s z·d⊥/cT} d`` (shear).

    At ``s = -i k`` this is the time-harmonic wave ``e^{i k z·d/cL} d + e^{i k z·d⊥/cT} d``.
    """

    mat: object
    s: complex
    d: tuple = (1 / math.sqrt(2), 1 / math.sqrt(2))
    pressure: bool = True
    shear: bool = True

    def _parts(self):
        d = np.asarray(self.d, dtype=float)
        dp = np.array([-d[1], d[0]])
        parts = []
        if self.pressure:
            parts.append((d, self.mat.cL))
        if self.shear:
            parts.append((dp, self.mat.cT))
        return d, parts

    def displacement(self, z):
        z = np.asarray(z, dtype=float)
        d, parts = self._parts()
        amp = sum(np.exp(-self.s * (z @ q) / c) for q, c in parts) if parts else np.zeros(z.shape[:-1])
        return amp[..., None] * d

    def gradient(self, z):
        z = np.asarray(z, dtype=float)
        d, parts = self._parts()
        g = np.zeros(z.shape[:-1] + (2, 2), dtype=complex)
        for q, c in parts:
            g += (-self.s / c * np.exp(-self.s * (z @ q) / c))[..., None, None] * np.outer(d, q)
        return g

    def stress(self, z):
        return stress_from_gradient(self.gradient(z), self.mat)


@dataclass
class IncidentSamples:
    beta0: np.ndarray
    beta1: np.ndarray


def traction_samples(wave, points, normals):
    return np.einsum("...ij,...j->...i", wave.stress(points), normals)


def sample_incident(grid: GridData, wave) -> IncidentSamples:
    """``beta0 = P+ beta0+ + P- beta0-`` and ``beta1 = Q (P+ beta1+ + P- beta1-)``."""
    b0 = [stack_blocks(wave.displacement(p)) for p in (grid.m_plus, grid.m_minus)]
    b1 = [
        stack_blocks(traction_samples(wave, p, n))
        for p, n in ((grid.m_plus, grid.n_plus), (grid.m_minus, grid.n_minus))
    ]
    beta0 = _mix_pm(grid, *b0)
    beta1 = matrix_Q(grid.N, grid.offsets).apply(_mix_pm(grid, *b1))
    return IncidentSamples(beta0, beta1)


# ---------------------------------------------------------------------------
# Binary dump
# ---------------------------------------------------------------------------

_MAGIC = b"ELCM"
_HEADER = struct.Struct("<4sIqqqdddddd")


def dump_matrix(path, A, N, s, mat):
    """Write ``A`` as: header ``<4sIqqqdddddd`` (magic ``ELCM``, version 1, rows,
    cols, N, Re s, Im s, lambda, mu, rho, reserved) then row-major little-endian
    complex128 entries."""
    A = np.ascontiguousarray(A, dtype="<c16")
    s = complex(s)
    header = _HEADER.pack(_MAGIC, 1, A.shape[0], A.shape[1], N, s.real, s.imag, mat.lam, mat.mu, mat.rho, 0.0)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(A.tobytes())


def load_matrix(path):
    """Inverse of :func:`dump_matrix`; returns ``(A, meta)``."""
    raw = Path(path).read_bytes()
    magic, version, rows, cols, N, sr, si, lam, mu, rho, _ = _HEADER.unpack_from(raw)
    if magic != _MAGIC or version != 1:
        raise ValueError(f"{path}: not an elcalderon matrix dump")
    A = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(rows, cols)
    return A.copy(), {"N": N, "s": complex(sr, si), "lambda": lam, "mu": mu, "rho": rho}
