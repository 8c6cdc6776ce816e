"""Copula families with cdf, exact block partials and order-d density.

Every copula carries ``dnorm``, the D-norm of the max-stable limit whose
domain of attraction it belongs to, so that the expansion
``C(u) = 1 - ||1 - u||_D + o(||1 - u||)`` can be checked numerically.
"""

from __future__ import annotations

import math

import numpy as np

from .dnorms import DNorm, inclusion_exclusion, logistic
from .errors import DomainError, UnsupportedFamilyError
from .partitions import DEFAULT_MAX_DIMENSION, faa_di_bruno, index_block


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


class Copula:
    """Common validation and the density/partial plumbing."""

    d: int
    dnorm: DNorm
    name = "copula"

    def _point(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.ndim == 0 or u.shape[-1] != self.d:
            raise DomainError(f"expected points with last axis {self.d}, got shape {u.shape}")
        if not np.all(np.isfinite(u)) or np.any(u < 0) or np.any(u > 1):
            raise DomainError("copula argument must lie in the unit cube")
        return u

    def _interior(self, u) -> np.ndarray:
        u = self._point(u)
        if np.any(u <= 0) or np.any(u >= 1):
            raise DomainError("derivatives need a point in the open unit cube")
        return u

    def cdf(self, u):
        raise NotImplementedError

    def block_partial(self, block, u):
        raise UnsupportedFamilyError(f"{self.name} has no exact partial derivatives")

    def density(self, u):
        """Order-d mixed partial of the cdf."""
        return self.block_partial(range(self.d), u)


class GeneralizedParetoCopula(Copula):
    """``C(u) = 1 - ||1 - u||_D`` on the upper interval ``[u0, 1]``.

    Below ``u0`` the copula is left unspecified and queries raise
    :class:`DomainError`.
    """

    name = "gpc"

    def __init__(self, dnorm: DNorm, u0=None):
        self.dnorm = dnorm
        self.d = dnorm.d
        u0 = np.full(self.d, 0.5) if u0 is None else np.broadcast_to(
            np.asarray(u0, dtype=float), (self.d,)
        ).copy()
        if np.any(u0 <= 0) or np.any(u0 >= 1):
            raise DomainError("u0 must lie in the open unit cube")
        self.u0 = u0

    def __repr__(self):
        return f"GeneralizedParetoCopula({self.dnorm}, u0={self.u0.tolist()})"

    def _region(self, u):
        if np.any(u < self.u0):
            raise DomainError(f"GPC is only specified on [u0, 1] with u0={self.u0.tolist()}")
        return u

    def cdf(self, u):
        u = self._region(self._point(u))
        return _scalar(np.clip(1.0 - self.dnorm(1.0 - u), 0.0, 1.0))

    def block_partial(self, block, u):
        u = self._region(self._point(u))
        if np.any(u >= 1):
            raise DomainError("derivatives need u < 1 componentwise")
        return self.dnorm.phi_block_partial(block, u - 1.0)


class ExtremeValueCopula(Copula):
    """``C_G(u) = exp(-||log u_1, ..., log u_d||_D)``."""

    name = "extreme-value"

    def __init__(self, dnorm: DNorm):
        self.dnorm = dnorm
        self.d = dnorm.d

    def __repr__(self):
        return f"ExtremeValueCopula({self.dnorm})"

    def cdf(self, u):
        u = self._point(u)
        zero = np.any(u == 0, axis=-1)
        with np.errstate(divide="ignore"):
            x = np.log(np.where(u == 0, 1.0, u))
        out = np.where(zero, 0.0, np.exp(-self.dnorm(x)))
        return _scalar(out)

    def block_partial(self, block, u):
        u = self._interior(u)
        block = index_block(block, self.d)
        if not self.dnorm.differentiable:
            raise UnsupportedFamilyError("extreme-value copula of the sup norm has no density")
        x = np.log(u)
        g = np.exp(-self.dnorm(x))
        val = faa_di_bruno(
            lambda m: g, g, lambda b: self.dnorm.phi_block_partial(b, x), block
        )
        return _scalar(val / np.prod(u[..., list(block)], axis=-1))


class GumbelHougaardCopula(ExtremeValueCopula):
    """``C_p(u) = exp(-(sum (-log u_i)^p)^(1/p))``; ``p = 1`` is independence."""

    name = "gumbel-hougaard"

    def __init__(self, p: float, d: int = 2):
        super().__init__(logistic(d, p))
        self.p = float(p)

    def __repr__(self):
        return f"GumbelHougaardCopula(p={self.p:g}, d={self.d})"


class InclusionExclusionCopula(Copula):
    """Copula whose upper tail is governed by the inclusion-exclusion D-norm.

    ``C(u) = 1 - d + sum u_i + sum_{|B|>=2} (-1)^{|B|} (sum_{j in B} 1/(1-u_j) - |B| + 1)^{-1}``

    It is the distribution of ``1 - W`` for ``W`` following the Clayton
    copula with parameter 1, so every term is a genuine survival probability.
    """

    name = "inclusion-exclusion"

    def __init__(self, d: int = 2):
        if d < 2 or d > DEFAULT_MAX_DIMENSION:
            raise DomainError(f"inclusion-exclusion copula needs 2 <= d <= {DEFAULT_MAX_DIMENSION}")
        self.d = d
        self.dnorm = inclusion_exclusion(d)
        self._subsets = self.dnorm._subsets

    def __repr__(self):
        return f"InclusionExclusionCopula(d={self.d})"

    def cdf(self, u):
        u = self._point(u)
        with np.errstate(divide="ignore"):
            a = 1.0 / (1.0 - u)
        out = 1.0 - self.d + u.sum(axis=-1)
        for s in self._subsets:
            tot = a[..., list(s)].sum(axis=-1) - len(s) + 1
            with np.errstate(divide="ignore"):
                h = np.where(np.isinf(tot), 0.0, 1.0 / tot)
            out = out + (-1) ** len(s) * h
        return _scalar(np.clip(out, 0.0, 1.0))

    def block_partial(self, block, u):
        u = self._interior(u)
        block = index_block(block, self.d)
        k = len(block)
        a = 1.0 / (1.0 - u)
        chain = np.prod(a[..., list(block)] ** 2, axis=-1)
        sign_k = (-1) ** k * math.factorial(k)
        out = np.full(u.shape[:-1], 1.0 if k == 1 else 0.0)
        bset = set(block)
        for s in self._subsets:
            if not bset.issubset(s):
                continue
            tot = a[..., list(s)].sum(axis=-1) - len(s) + 1
            out = out + (-1) ** len(s) * sign_k * tot ** -(k + 1) * chain
        return _scalar(out)


def copula_cdf(copula: Copula, u):
    return copula.cdf(u)


def copula_block_partial(copula: Copula, block, u):
    return copula.block_partial(block, u)


def copula_density(copula: Copula, u):
    return copula.density(u)


def scaled_expansion_residual(copula: Copula, t: float, w=None) -> float:
    """``[C(1 - t w) - 1 + ||t w||_D] / t`` along direction ``w`` (default all ones).

    Tends to zero as ``t`` decreases when the copula satisfies the D-norm
    expansion at 1.
    """
    w = np.ones(copula.d) if w is None else np.asarray(w, dtype=float)
    if not 0 < t <= 1 or np.any(w < 0):
        raise DomainError("need t in (0, 1] and a nonnegative direction")
    u = 1.0 - t * w
    if np.any(u < 0):
        raise DomainError("1 - t*w leaves the unit cube")
    return (copula.cdf(u) - 1.0 + copula.dnorm(t * w)) / t


def scaled_partial_limit_check(copula: Copula, block, x, ns):
    """Sequence ``n * d^B/d^B x [C(1 + x/n)]`` against ``d^B phi(x)``.

    ``phi = -||.||_D``. Returns a list of ``(n, value, target)`` triples; no
    limit is asserted here.
    """
    x = np.asarray(x, dtype=float)
    block = index_block(block, copula.d)
    target = copula.dnorm.phi_block_partial(block, x)
    out = []
    for n in ns:
        u = 1.0 + x / n
        if np.any(u <= 0):
            raise DomainError(f"1 + x/n leaves the unit cube at n={n}")
        value = n ** (1 - len(block)) * copula.block_partial(block, u)
        out.append((n, float(value), float(target)))
    return out
