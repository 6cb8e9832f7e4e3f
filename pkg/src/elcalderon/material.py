"""Isotropic elastic material parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Material:
    """Homogeneous isotropic medium given by Lamé parameters and density.

    ``cL`` and ``cT`` are the pressure and shear wave speeds and
    ``xi = cT / cL``.
    """

    lam: float
    mu: float
    rho: float

    def __post_init__(self):
        for name in ("lam", "mu", "rho"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def cL(self) -> float:
        return math.sqrt((self.lam + 2.0 * self.mu) / self.rho)

    @property
    def cT(self) -> float:
        return math.sqrt(self.mu / self.rho)

    @property
    def xi(self) -> float:
        return math.sqrt(self.mu / (self.lam + 2.0 * self.mu))

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "mu": self.mu, "rho": self.rho}

    @classmethod
    def from_dict(cls, data: dict) -> "Material":
        return cls(float(data.get("lambda", data.get("lam"))), float(data["mu"]), float(data["rho"]))


#: Parameters of the frequency- and time-domain test problems.
DEFAULT_MATERIAL = Material(lam=5.0, mu=3.0, rho=2.5)
