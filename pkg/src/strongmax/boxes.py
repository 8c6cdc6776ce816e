"""Axis-aligned boxes and cdf-based rectangle masses."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class BoxRegion:
    """``[lower, upper]`` with ``lower < upper`` componentwise."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    orientation: str = "negative-orthant"

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi):
            raise DomainError("box corners differ in dimension")
        if not all(a < b for a, b in zip(lo, hi)):
            raise DomainError(f"box needs lower < upper, got {lo} and {hi}")
        if self.orientation not in ("negative-orthant", "unit-cube", "real"):
            raise DomainError(f"unknown box orientation {self.orientation!r}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def d(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    @classmethod
    def cube(cls, lo: float, hi: float, d: int, orientation: str = "negative-orthant"):
        return cls((lo,) * d, (hi,) * d, orientation)

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper), "orientation": self.orientation}


def rectangle_mass(cdf, lower, upper) -> float:
    """Probability of ``(lower, upper]`` from a distribution function by inclusion-exclusion."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    d = lower.size
    corners = np.array(list(itertools.product((0, 1), repeat=d)), dtype=bool)
    pts = np.where(corners, lower, upper)
    signs = (-1.0) ** corners.sum(axis=1)
    vals = np.asarray(cdf(pts), dtype=float)
    return float(np.sum(signs * vals))
