"""Fully discrete Calderón calculus for two-dimensional elastic waves."""

__version__ = "0.1.0"

from .material import DEFAULT_MATERIAL, Material  # noqa: E402,F401
