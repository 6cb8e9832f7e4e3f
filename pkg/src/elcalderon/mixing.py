"""Banded circulant stencils (Q, P+, P-, M, D) and the arc flip matrices H, |H|.

Vectors of length ``2N`` hold component 1 of every block first, then
component 2.  A stencil acts identically on both halves and, in multi-curve
scenes, independently on every curve segment given by ``offsets``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_offsets(N, offsets):
    if offsets is None:
        return ((0, N),)
    offsets = tuple((int(a), int(b)) for a, b in offsets)
    if offsets[0][0] != 0 or offsets[-1][1] != N or any(
        offsets[k][1] != offsets[k + 1][0] for k in range(len(offsets) - 1)
    ):
        raise ValueError(f"offsets {offsets} do not tile 0..{N}")
    return offsets


@dataclass(frozen=True)
class BlockCirculant:
    """Circulant scalar block ``(A x)_i = sum_k w_k x_{i+k}`` repeated per component and curve.

    ``weights`` maps index offset ``k`` to the weight; entry ``(i, j)`` of the
    scalar block is ``weights[(j - i) mod n]``.
    """

    N: int
    weights: dict
    offsets: tuple = field(default=None)

    # Make ``ndarray @ stencil`` dispatch to __rmatmul__.
    __array_ufunc__ = None

    def __post_init__(self):
        object.__setattr__(self, "offsets", _as_offsets(self.N, self.offsets))
        object.__setattr__(self, "weights", {int(k): float(w) for k, w in self.weights.items()})

    @property
    def shape(self):
        return (2 * self.N, 2 * self.N)

    @property
    def T(self) -> "BlockCirculant":
        return BlockCirculant(self.N, {-k: w for k, w in self.weights.items()}, self.offsets)

    def first_row(self, curve: int = 0) -> np.ndarray:
        a, b = self.offsets[curve]
        row = np.zeros(b - a)
        for k, w in self.weights.items():
            row[k % (b - a)] += w
        return row

    def apply(self, x):
        """Apply along axis 0 of an array with leading dimension ``2N``."""
        x = np.asarray(x)
        if x.shape[0] != 2 * self.N:
            raise ValueError(f"dimension mismatch: operator size {2 * self.N}, operand {x.shape[0]}")
        xs = x.reshape((2, self.N) + x.shape[1:])
        out = np.zeros(xs.shape, dtype=np.result_type(x.dtype, np.float64))
        for a, b in self.offsets:
            n = b - a
            for k, w in self.weights.items():
                # out[i] += w x[(i + k) mod n] as two contiguous slabs
                k %= n
                dst = out[:, a:b]
                src = xs[:, a:b]
                if k == 0:
                    dst += w * src
                    continue
                dst[:, : n - k] += w * src[:, k:]
                dst[:, n - k:] += w * src[:, :k]
        return out.reshape(x.shape)

    def __matmul__(self, other):
        if isinstance(other, BlockCirculant):
            return self.dense() @ other.dense()
        return self.apply(other)

    def __rmatmul__(self, other):
        # A @ C = (C^T A^T)^T
        other = np.asarray(other)
        return self.T.apply(other.T).T

    def dense(self) -> np.ndarray:
        return self.apply(np.eye(2 * self.N))


def _stencil(N, weights, offsets, min_size):
    offsets = _as_offsets(N, offsets)
    for a, b in offsets:
        if b - a < min_size:
            raise ValueError(f"curve with {b - a} points; at least {min_size} required")
    return BlockCirculant(N, weights, offsets)


def matrix_Q(N, offsets=None) -> BlockCirculant:
    """``TC(22, 1, 0, ..., 0, 1) / 24``."""
    return _stencil(N, {0: 22 / 24, 1: 1 / 24, -1: 1 / 24}, offsets, 3)


def matrix_Ppm(N, offsets=None):
    """``(P+, P-)`` with ``P+ = TC(5, 0, ..., 0, 1) / 12`` and ``P- = (P+)^T``."""
    plus = _stencil(N, {0: 5 / 12, -1: 1 / 12}, offsets, 2)
    return plus, plus.T


def matrix_M(N, offsets=None) -> BlockCirculant:
    """Mass matrix ``TC(7, 1, 0, ..., 0, 1) / 9``."""
    return _stencil(N, {0: 7 / 9, 1: 1 / 9, -1: 1 / 9}, offsets, 3)


def matrix_D(N, offsets=None) -> BlockCirculant:
    """Difference matrix ``TC(-1, 1, 0, ..., 0)``."""
    return _stencil(N, {0: -1.0, 1: 1.0}, offsets, 3)


def _flip(N, offsets):
    if offsets is not None and len(_as_offsets(N, offsets)) > 1:
        raise ValueError("H and |H| are defined for a single arc only")
    if N % 2:
        raise ValueError(f"H requires an even number of points, got {N}")
    F = np.eye(N)[::-1]
    Z = np.zeros((N, N))
    return np.block([[F, Z], [Z, F]])


def matrix_H(N, offsets=None) -> np.ndarray:
    """``I - F`` with ``F`` the block reversal ``j -> N+1-j``: kills even vectors, doubles odd ones."""
    return np.eye(2 * N) - _flip(N, offsets)


def matrix_absH(N, offsets=None) -> np.ndarray:
    """Entrywise absolute value of ``H``, i.e. ``I + F``."""
    return np.eye(2 * N) + _flip(N, offsets)


def flip_blocks(v):
    """Reverse block order (``j -> N+1-j``) in each component half."""
    v = np.asarray(v)
    N = v.shape[0] // 2
    return v.reshape((2, N) + v.shape[1:])[:, ::-1].reshape(v.shape)


def is_even(v, tol=1e-12) -> bool:
    v = np.asarray(v)
    return bool(np.max(np.abs(v - flip_blocks(v)), initial=0.0) <= tol * max(np.max(np.abs(v), initial=0.0), 1e-300))


def is_odd(v, tol=1e-12) -> bool:
    v = np.asarray(v)
    return bool(np.max(np.abs(v + flip_blocks(v)), initial=0.0) <= tol * max(np.max(np.abs(v), initial=0.0), 1e-300))


def apply(matrix, v):
    """Apply a stencil or dense matrix to a density vector."""
    if isinstance(matrix, BlockCirculant):
        return matrix.apply(v)
    return np.asarray(matrix) @ v
