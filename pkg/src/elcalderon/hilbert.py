"""Discrete periodic Hilbert transform: identities, projections and the fork order study.

Grids are ``t_j = j h`` with ``h = 1/N``.  The transform is
``(Hφ)(t) = p.v. ∫_0^1 cot(π(t-τ)) φ(τ) dτ``, so ``H e_n = -i sign(n) e_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ALPHA = math.sqrt(3.0)  # cot(π/6)


def _pole_check(x, what):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x - np.round(x)) < 1e-15):
        raise ValueError(f"{what} evaluated at a pole")
    return x


def log_sharp(t):
    """``log(4 sin²(π t))``."""
    t = _pole_check(t, "log_sharp")
    return np.log(4.0 * np.sin(np.pi * t) ** 2)


def cot_kernel(t):
    """``cot(π t)``."""
    t = _pole_check(t, "cot_kernel")
    return 1.0 / np.tan(np.pi * t)


def _nodes(N, upper=None):
    upper = N if upper is None else upper
    return np.arange(1, upper + 1) / N


def pole_free_points(N, count, rng, margin=0.05):
    """Random ``t`` in ``(0, 1)`` at least ``margin·h`` away from every node ``j h``."""
    j = rng.integers(0, N, count)
    return (j + rng.uniform(margin, 1.0 - margin, count)) / N


def verify_log_identity(N, t):
    """``|Σ_{j=1}^N log_#(t - t_j) - log_#(t/h)|``."""
    _pole_check(N * t, "log identity")
    return float(abs(np.sum(log_sharp(t - _nodes(N))) - log_sharp(N * t)))


def verify_cot_identity(N, t, upper=None):
    """``|h Σ_j cot(π(t - t_j)) - cot(π t/h)|``; ``upper`` is the last summation index."""
    _pole_check(N * t, "cot identity")
    return float(abs(np.sum(cot_kernel(t - _nodes(N, upper))) / N - cot_kernel(N * t)))


@dataclass
class TrigPoly:
    """Finite sum ``Σ c_n e_n(t)`` with ``e_n(t) = exp(2π i n t)``."""

    coef: dict

    def __post_init__(self):
        self.coef = {int(n): complex(c) for n, c in self.coef.items()}

    @classmethod
    def basis(cls, n):
        return cls({n: 1.0})

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for n, c in self.coef.items():
            out += c * np.exp(2j * np.pi * n * t)
        return out

    def derivative(self, order=1):
        return TrigPoly({n: c * (2j * np.pi * n) ** order for n, c in self.coef.items()})

    def hilbert(self):
        return TrigPoly({n: -1j * np.sign(n) * c for n, c in self.coef.items() if n != 0})

    def fourier(self, mu):
        return self.coef.get(int(mu), 0.0)

    @property
    def degree(self):
        return max((abs(n) for n in self.coef), default=0)


def hilbert_exact(phi: TrigPoly, t):
    return phi.hilbert()(t)


def discrete_cot_sum(phi, N, t, upper=None):
    """``h Σ_{j=1}^{upper} cot(π(t - t_j)) φ(t_j)`` with ``upper = N`` by default.

    ``phi`` may be a callable or an array of the ``N`` node values ``φ(t_1..t_N)``.
    """
    _pole_check(N * np.asarray(t), "discrete cot sum")
    tj = _nodes(N, upper)
    vals = np.asarray(phi)[: len(tj)] if not callable(phi) else phi(tj)
    t = np.asarray(t, dtype=float)
    K = cot_kernel(t[..., None] - tj)
    return (K @ vals) / N


def trig_quadrature_residual(phi: TrigPoly, N, t, upper=None):
    """``|h Σ cot(π(t - t_j)) φ(t_j) - (Hφ)(t) - cot(π t/h) φ(t)|`` for ``φ`` in the grid's trigonometric space."""
    t = np.asarray(t, dtype=float)
    lhs = discrete_cot_sum(phi, N, t, upper)
    rhs = phi.hilbert()(t) + cot_kernel(N * t) * phi(t)
    return np.abs(lhs - rhs)


def averaging_delta(values):
    """``(1/24) φ(·-h) + (11/12) φ + (1/24) φ(·+h)`` on periodic node values."""
    v = np.asarray(values)
    return (np.roll(v, 1) + np.roll(v, -1)) / 24.0 + 11.0 / 12.0 * v


@dataclass
class PiecewiseConstant:
    """1-periodic step function equal to ``values[j-1]`` on ``(t_j - h/2, t_j + h/2)``, ``t_j = j h``."""

    values: np.ndarray

    @property
    def N(self):
        return len(self.values)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        j = np.floor(t * self.N + 0.5).astype(int)  # nearest node index
        return np.asarray(self.values)[(j - 1) % self.N]

    def fourier(self, mu):
        """``∫_0^1 φ_h(t) e^{-2πiμt} dt = h sinc(πμh) Σ_j v_j e^{-2πiμ t_j}``."""
        N = self.N
        tj = _nodes(N)
        return np.sinc(mu / N) * np.sum(np.asarray(self.values) * np.exp(-2j * np.pi * mu * tj)) / N


def fourier_projection_Dh(phi: TrigPoly, N) -> PiecewiseConstant:
    """The step function whose Fourier coefficients match ``φ`` for ``-N/2 ≤ μ < N/2``.

    A width-``h`` box has symbol ``h sinc(π μ h)``, which stays above ``2/π``
    on that window, so dividing by it is safe.
    """
    mus = np.arange(-(N // 2), N - N // 2)
    tj = _nodes(N)
    coef = np.array([phi.fourier(m) for m in mus], dtype=complex) / np.sinc(mus / N)
    vals = np.exp(2j * np.pi * np.outer(tj, mus)) @ coef
    return PiecewiseConstant(vals)


def fork_functional(minus, plus, prev_plus, next_minus, a):
    """``(a/2)(φ(t_i^-) + φ(t_i^+)) + ((1-a)/2)(φ(t_{i-1}^+) + φ(t_{i+1}^-))``."""
    return 0.5 * a * (np.asarray(minus) + plus) + 0.5 * (1.0 - a) * (np.asarray(prev_plus) + next_minus)


def fork_weights(a):
    """Weights on ``(t_i^-, t_i^+, t_{i-1}^+, t_{i+1}^-)``."""
    return (a / 2, a / 2, (1 - a) / 2, (1 - a) / 2)


def _companions(N):
    i = _nodes(N) * N
    return (i - 1 / 6) / N, (i + 1 / 6) / N, (i - 1 + 1 / 6) / N, (i + 1 - 1 / 6) / N


def consistency_error(phi: TrigPoly, N, a):
    """``max_i |⟨H_h D_h φ - H φ, δ_i*⟩|``."""
    Dphi = fourier_projection_Dh(phi, N)
    smoothed = averaging_delta(Dphi.values)
    Hphi = phi.hilbert()
    pts = _companions(N)
    disc = [discrete_cot_sum(smoothed, N, t) for t in pts]
    exact = [Hphi(t) for t in pts]
    err = fork_functional(*(d - e for d, e in zip(disc, exact)), a)
    return float(np.max(np.abs(err)))


def consistency_order_study(a, Ns=(16, 32, 64, 128), phi=None):
    """Errors and least-squares slope of ``log(error)`` against ``log h``."""
    if len(Ns) < 3:
        raise ValueError("order study needs at least three grid levels")
    phi = TrigPoly.basis(2) if phi is None else phi
    errors = np.array([consistency_error(phi, N, a) for N in Ns])
    h = 1.0 / np.asarray(Ns, dtype=float)
    with np.errstate(divide="ignore"):
        slope = float(np.polyfit(np.log(h), np.log(errors), 1)[0]) if np.all(errors > 0) else float("nan")
    local = [None] + [math.log2(e0 / e1) if e0 > 0 and e1 > 0 else None for e0, e1 in zip(errors[:-1], errors[1:])]
    return {"N": list(Ns), "error": errors.tolist(), "local_slope": local, "slope": slope, "a": a}
