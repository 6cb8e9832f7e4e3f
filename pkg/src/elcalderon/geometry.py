"""Curve parametrizations and the staggered samplings used by every operator.

Arrays are 0-based: position ``p`` holds the grid quantity with (1-based)
index ``j = p + 1``.  For closed curves the main grid is

    m_j = x(j h),   b_j = x((j - 1/2) h),   n_j = h n(j h),

with companion grids shifted by ``±h/6`` in parameter space.  Open arcs use
the cosine-sampled curve ``a(t) = x(1/2 + 1/2 cos(pi (2t - 1)))`` and the
whole grid is moved back by ``h/2`` so that the arc tips are breakpoints.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

CLOSED = "closed"
ARC = "arc"

_TWO_PI = 2.0 * math.pi


class Curve:
    """Smooth parametrized curve with an analytic derivative.

    Closed curves are 1-periodic and positively oriented; arcs are defined on
    ``[0, 1]``.  Subclasses implement ``_x`` and ``_dx`` on arrays of
    parameters, returning arrays with a trailing axis of length 2.
    """

    kind = CLOSED

    def x(self, t):
        return self._x(np.asarray(t, dtype=float))

    def dx(self, t):
        return self._dx(np.asarray(t, dtype=float))

    def normal(self, t):
        """Unnormalized normal ``(x2', -x1')``."""
        d = self.dx(t)
        return np.stack([d[..., 1], -d[..., 0]], axis=-1)

    def _x(self, t):  # pragma: no cover - abstract
        raise NotImplementedError

    def _dx(self, t):  # pragma: no cover - abstract
        raise NotImplementedError

    def config(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError


class Ellipse(Curve):
    """``x(t) = c + (a cos 2 pi t, b sin 2 pi t)``."""

    def __init__(self, a: float, b: float, center=(0.0, 0.0)):
        if a <= 0 or b <= 0:
            raise ValueError("ellipse semi-axes must be positive")
        self.a = float(a)
        self.b = float(b)
        self.center = np.asarray(center, dtype=float)

    def _x(self, t):
        return self.center + np.stack(
            [self.a * np.cos(_TWO_PI * t), self.b * np.sin(_TWO_PI * t)], axis=-1
        )

    def _dx(self, t):
        return _TWO_PI * np.stack(
            [-self.a * np.sin(_TWO_PI * t), self.b * np.cos(_TWO_PI * t)], axis=-1
        )

    def config(self):
        return {"kind": "ellipse", "a": self.a, "b": self.b, "center": self.center.tolist()}


class Circle(Ellipse):
    def __init__(self, radius: float = 1.0, center=(0.0, 0.0)):
        super().__init__(radius, radius, center)
        self.radius = float(radius)

    def config(self):
        return {"kind": "circle", "radius": self.radius, "center": self.center.tolist()}


class Kite(Curve):
    """The kite ``(cos 2 pi t + 0.65 cos 4 pi t - 0.65, 1.5 sin 2 pi t)``, scaled."""

    def __init__(self, scale: float = 1.0, center=(0.0, 0.0)):
        self.scale = float(scale)
        self.center = np.asarray(center, dtype=float)

    def _x(self, t):
        w = _TWO_PI * t
        return self.center + self.scale * np.stack(
            [np.cos(w) + 0.65 * np.cos(2 * w) - 0.65, 1.5 * np.sin(w)], axis=-1
        )

    def _dx(self, t):
        w = _TWO_PI * t
        return self.scale * _TWO_PI * np.stack(
            [-np.sin(w) - 1.3 * np.sin(2 * w), 1.5 * np.cos(w)], axis=-1
        )

    def config(self):
        return {"kind": "kite", "scale": self.scale, "center": self.center.tolist()}


class FourierCurve(Curve):
    """Truncated Fourier parametrization.

    ``x_d(t) = c_d + sum_k (cos_d[k] cos(2 pi k t) + sin_d[k] sin(2 pi k t))``
    for ``k = 1..K`` and ``d = 1, 2``.
    """

    def __init__(self, center, cos1, sin1, cos2, sin2):
        self.center = np.asarray(center, dtype=float)
        self.coef = [np.asarray(c, dtype=float) for c in (cos1, sin1, cos2, sin2)]
        if len({len(c) for c in self.coef}) != 1:
            raise ValueError("all Fourier coefficient lists must have the same length")
        self.k = np.arange(1, len(self.coef[0]) + 1)

    def _eval(self, t, deriv):
        w = _TWO_PI * t[..., None] * self.k
        out = []
        for cc, ss in ((self.coef[0], self.coef[1]), (self.coef[2], self.coef[3])):
            if deriv:
                val = (_TWO_PI * self.k * (-cc * np.sin(w) + ss * np.cos(w))).sum(-1)
            else:
                val = (cc * np.cos(w) + ss * np.sin(w)).sum(-1)
            out.append(val)
        res = np.stack(out, axis=-1)
        return res if deriv else res + self.center

    def _x(self, t):
        return self._eval(t, False)

    def _dx(self, t):
        return self._eval(t, True)

    def config(self):
        return {
            "kind": "fourier",
            "center": self.center.tolist(),
            "cos1": self.coef[0].tolist(),
            "sin1": self.coef[1].tolist(),
            "cos2": self.coef[2].tolist(),
            "sin2": self.coef[3].tolist(),
        }


class HalfCircleArc(Curve):
    """Open arc ``x(u) = c + R (cos pi u, sin pi u)`` for ``u`` in ``[0, 1]``."""

    kind = ARC

    def __init__(self, radius: float = 1.0, center=(0.0, 0.0)):
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=float)

    def _x(self, u):
        return self.center + self.radius * np.stack(
            [np.cos(math.pi * u), np.sin(math.pi * u)], axis=-1
        )

    def _dx(self, u):
        return self.radius * math.pi * np.stack(
            [-np.sin(math.pi * u), np.cos(math.pi * u)], axis=-1
        )

    def config(self):
        return {"kind": "half-circle", "radius": self.radius, "center": self.center.tolist()}


_CURVE_KINDS = {
    "ellipse": lambda d: Ellipse(d["a"], d["b"], d.get("center", (0.0, 0.0))),
    "circle": lambda d: Circle(d.get("radius", 1.0), d.get("center", (0.0, 0.0))),
    "kite": lambda d: Kite(d.get("scale", 1.0), d.get("center", (0.0, 0.0))),
    "fourier": lambda d: FourierCurve(
        d.get("center", (0.0, 0.0)), d["cos1"], d["sin1"], d["cos2"], d["sin2"]
    ),
    "half-circle": lambda d: HalfCircleArc(d.get("radius", 1.0), d.get("center", (0.0, 0.0))),
}


def curve_from_config(config: dict) -> Curve:
    """Build a curve from its JSON description, e.g. ``{"kind": "ellipse", "a": 4, "b": 3}``."""
    try:
        factory = _CURVE_KINDS[config["kind"]]
    except KeyError:
        raise ValueError(f"unknown curve kind in {config!r}") from None
    return factory(config)


def load_scene(source) -> list[Curve]:
    """Read a curve or scene description from a JSON file path, string or dict.

    A scene is ``{"curves": [curve, ...]}``; a bare curve object is accepted
    as a one-curve scene.
    """
    if isinstance(source, dict):
        data = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            data = json.loads(text)
        else:
            data = json.loads(Path(text).read_text())
    items = data["curves"] if "curves" in data else [data]
    return [curve_from_config(item) for item in items]


@dataclass(frozen=True)
class GridData:
    """The three staggered samplings of one curve or a multi-curve scene.

    All point arrays have shape ``(N, 2)``.  ``offsets`` lists the
    ``(start, stop)`` index range of every curve; circulant mixing acts
    independently on each range.
    """

    kind: str
    m: np.ndarray
    b: np.ndarray
    n: np.ndarray
    m_plus: np.ndarray
    m_minus: np.ndarray
    b_plus: np.ndarray
    b_minus: np.ndarray
    n_plus: np.ndarray
    n_minus: np.ndarray
    offsets: tuple = field(default=())

    def __post_init__(self):
        for name in ("m", "b", "n", "m_plus", "m_minus", "b_plus", "b_minus", "n_plus", "n_minus"):
            getattr(self, name).setflags(write=False)
        if not self.offsets:
            object.__setattr__(self, "offsets", ((0, len(self.m)),))

    @property
    def N(self) -> int:
        return len(self.m)

    @property
    def sizes(self) -> list[int]:
        return [stop - start for start, stop in self.offsets]

    @property
    def h(self) -> float:
        if len(self.offsets) != 1:
            raise ValueError("h is only defined for single-curve grids")
        return 1.0 / self.N


def _build(curve: Curve, N: int, shift: float, kind: str, point=None, normal=None) -> GridData:
    h = 1.0 / N
    j = np.arange(1, N + 1, dtype=float)
    tm = (j - shift) * h
    tb = tm - 0.5 * h
    point = curve.x if point is None else point
    nrm = curve.normal if normal is None else normal
    sixth = h / 6.0
    return GridData(
        kind=kind,
        m=point(tm),
        b=point(tb),
        n=h * nrm(tm),
        m_plus=point(tm + sixth),
        m_minus=point(tm - sixth),
        b_plus=point(tb + sixth),
        b_minus=point(tb - sixth),
        n_plus=h * nrm(tm + sixth),
        n_minus=h * nrm(tm - sixth),
    )


def sample_closed(curve: Curve, N: int) -> GridData:
    """Sample midpoints, breakpoints and scaled normals of a closed curve."""
    if curve.kind != CLOSED:
        raise ValueError("sample_closed requires a closed curve")
    if int(N) != N or N < 4:
        raise ValueError(f"N must be an integer >= 4, got {N!r}")
    N = int(N)
    grid = _build(curve, N, 0.0, CLOSED)
    h = 1.0 / N
    for arr in (grid.n, grid.n_plus, grid.n_minus):
        if np.min(np.hypot(arr[:, 0], arr[:, 1])) <= 1e-14 * h:
            raise ValueError("degenerate parametrization: |x'(t)| vanishes at a sample")
    return grid


def cosine_map(t):
    """``phi(t) = 1/2 + 1/2 cos(pi (2t - 1))``: even, 1-periodic, onto ``[0, 1]``."""
    return 0.5 + 0.5 * np.cos(math.pi * (2.0 * t - 1.0))


def sample_arc(curve: Curve, N: int) -> GridData:
    """Cosine sampling of an open arc; ``N = 2M`` must be even."""
    if curve.kind != ARC:
        raise ValueError("sample_arc requires an open arc")
    if int(N) != N or N < 2 or N % 2:
        raise ValueError(f"N must be an even positive integer, got {N!r}")
    N = int(N)

    def point(t):
        return curve.x(cosine_map(t))

    def normal(t):
        t = np.asarray(t, dtype=float)
        d = curve.dx(cosine_map(t))
        fac = -math.pi * np.sin(math.pi * (2.0 * t - 1.0))
        return fac[..., None] * np.stack([d[..., 1], -d[..., 0]], axis=-1)

    return _build(curve, N, 0.5, ARC, point=point, normal=normal)


def sample(curve: Curve, N: int) -> GridData:
    return sample_arc(curve, N) if curve.kind == ARC else sample_closed(curve, N)


def concat_scenes(grids: Sequence[GridData]) -> GridData:
    """Concatenate grids of distinct curves, recording per-curve index ranges."""
    grids = list(grids)
    if not grids:
        raise ValueError("need at least one grid")
    if len(grids) == 1:
        return grids[0]
    if any(g.kind == ARC for g in grids):
        raise ValueError("open arcs cannot be combined into scenes")
    offsets = []
    start = 0
    for g in grids:
        for a, b in g.offsets:
            offsets.append((start + a, start + b))
        start += g.N
    names = ("m", "b", "n", "m_plus", "m_minus", "b_plus", "b_minus", "n_plus", "n_minus")
    arrays = {name: np.concatenate([getattr(g, name) for g in grids]) for name in names}
    return GridData(kind=CLOSED, offsets=tuple(offsets), **arrays)


def observation_points(radius: float, count: int = 10, seed: int = 0, center=(0.0, 0.0)):
    """Seeded random points on a circle."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, _TWO_PI, count)
    return np.asarray(center, dtype=float) + radius * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
