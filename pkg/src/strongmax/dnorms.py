"""D-norms with exact evaluation and exact mixed partial derivatives.

Three families are provided:

* ``logistic``: ``||x||_p = (sum |x_i|^p)^(1/p)``, ``p >= 1``;
* ``sup``: ``max |x_i|`` (evaluation only, no order-d partials);
* ``inclusion-exclusion``:
  ``sum |x_i| + sum_{|B|>=2} (-1)^{|B|+1} (sum_{j in B} 1/|x_j|)^{-1}``.

Partial derivatives are taken on the open negative orthant, where
``|x_i| = -x_i``. Points are arrays whose last axis has length ``d``; leading
axes are evaluated elementwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnsupportedFamilyError
from .partitions import DEFAULT_MAX_DIMENSION, IndexBlock, index_block

FAMILIES = ("logistic", "sup", "inclusion-exclusion")


def _subsets(d: int, min_size: int) -> tuple[tuple[int, ...], ...]:
    return tuple(
        s for r in range(min_size, d + 1) for s in itertools.combinations(range(d), r)
    )


@dataclass(frozen=True)
class DNorm:
    """A D-norm on ``R^d`` from one of the supported families."""

    d: int
    family: str
    p: float | None = None
    _subsets: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnsupportedFamilyError(f"unknown D-norm family {self.family!r}")
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d!r}")
        if self.family == "logistic":
            if self.p is None or not np.isfinite(self.p) or self.p < 1:
                raise DomainError(f"logistic D-norm needs finite p >= 1, got {self.p!r}")
        elif self.p is not None:
            raise DomainError(f"{self.family} D-norm takes no parameter")
        if self.family == "inclusion-exclusion" and self.d > DEFAULT_MAX_DIMENSION:
            raise DomainError(
                f"inclusion-exclusion D-norm limited to d <= {DEFAULT_MAX_DIMENSION}"
            )
        subsets = _subsets(self.d, 2) if self.family == "inclusion-exclusion" else ()
        object.__setattr__(self, "_subsets", subsets)

    @property
    def differentiable(self) -> bool:
        """Whether order-d block partials exist on the open negative orthant."""
        return self.family != "sup"

    def __str__(self):
        if self.family == "logistic":
            return f"logistic(p={self.p:g}, d={self.d})"
        return f"{self.family}(d={self.d})"

    # -- evaluation -------------------------------------------------------

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.d:
            raise DomainError(f"expected points with last axis {self.d}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DomainError("D-norm argument must be finite")
        return x

    def __call__(self, x):
        """Evaluate ``||x||_D``."""
        x = self._check_point(x)
        a = np.abs(x)
        if self.family == "sup":
            out = a.max(axis=-1)
        elif self.family == "logistic":
            m = a.max(axis=-1)
            safe = np.where(m > 0, m, 1.0)
            out = m * np.sum((a / safe[..., None]) ** self.p, axis=-1) ** (1.0 / self.p)
        else:
            out = a.sum(axis=-1)
            # zero (or subnormal) coordinates give infinite reciprocals whose
            # subset terms vanish
            with np.errstate(divide="ignore", over="ignore"):
                inv = 1.0 / a
            for s in self._subsets:
                with np.errstate(over="ignore"):
                    tot = inv[..., list(s)].sum(axis=-1)
                with np.errstate(divide="ignore"):
                    h = np.where(np.isinf(tot), 0.0, 1.0 / tot)
                out = out + (-1) ** (len(s) + 1) * h
        return float(out) if out.ndim == 0 else out

    # -- derivatives --------------------------------------------------------

    def _check_interior(self, x) -> np.ndarray:
        if not self.differentiable:
            raise UnsupportedFamilyError(
                "the sup norm has no order-d partial derivatives"
            )
        x = self._check_point(x)
        if not np.all(x < 0):
            raise DomainError("block partials need a point in the open negative orthant")
        return x

    def block_partial(self, block, x):
        """Exact mixed partial of ``||x||_D`` over the coordinates in ``block``."""
        x = self._check_interior(x)
        block = index_block(block, self.d)
        k = len(block)
        a = -x
        if self.family == "logistic":
            p = self.p
            s = np.sum(a**p, axis=-1)
            coef = math.prod(1.0 / p - j for j in range(k))
            if coef == 0.0:
                out = np.zeros(s.shape)
            else:
                out = coef * s ** (1.0 / p - k)
                for i in block:
                    out = out * (-p * a[..., i] ** (p - 1.0))
        else:
            out = np.full(a.shape[:-1], -1.0 if k == 1 else 0.0)
            inv = 1.0 / a
            chain = np.prod(x[..., list(block)] ** -2.0, axis=-1)
            sign_k = (-1) ** k * math.factorial(k)
            bset = set(block)
            for s in self._subsets:
                if not bset.issubset(s):
                    continue
                tot = inv[..., list(s)].sum(axis=-1)
                out = out + (-1) ** (len(s) + 1) * sign_k * tot ** -(k + 1) * chain
        return float(out) if np.ndim(out) == 0 else out

    def phi_block_partial(self, block, x):
        """Mixed partial of ``phi(x) = -||x||_D`` over ``block``."""
        return -self.block_partial(block, x)


def logistic(d: int, p: float) -> DNorm:
    return DNorm(d, "logistic", float(p))


def sup_norm(d: int) -> DNorm:
    return DNorm(d, "sup")


def inclusion_exclusion(d: int) -> DNorm:
    return DNorm(d, "inclusion-exclusion")


def dnorm_eval(norm: DNorm, x):
    return norm(x)


def dnorm_block_partial(norm: DNorm, block: IndexBlock, x):
    return norm.block_partial(block, x)


def phi_block_partial(norm: DNorm, block: IndexBlock, x):
    return norm.phi_block_partial(block, x)
