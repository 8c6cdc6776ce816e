"""Laws of componentwise maxima and their max-stable limits.

Densities of composed distribution functions are assembled with
:func:`strongmax.partitions.faa_di_bruno` from exact D-norm or copula block
partials; nothing here differentiates numerically.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from .boxes import BoxRegion, rectangle_mass
from .copulas import Copula
from .dnorms import DNorm
from .errors import DomainError, NumericalError, UnsupportedFamilyError
from .margins import MarginFamily, gev_logcdf, gev_quantile
from .partitions import faa_di_bruno, index_block

#: Densities in ``(-NEGATIVE_TOLERANCE, 0)`` are rounded up to zero.
NEGATIVE_TOLERANCE = 1e-12


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def _clamp_density(v):
    v = np.asarray(v, dtype=float)
    if np.any(v < -NEGATIVE_TOLERANCE):
        raise NumericalError(f"density is negative ({v.min():.3e}) beyond round-off")
    return _scalar(np.maximum(v, 0.0))


def _require_density(dnorm: DNorm):
    if not dnorm.differentiable:
        raise UnsupportedFamilyError(
            "the sup-norm limit has no Lebesgue density (complete dependence)"
        )


def _phi_partials(dnorm: DNorm, x):
    cache = {}

    def inner(b):
        if b not in cache:
            cache[b] = dnorm.phi_block_partial(b, x)
        return cache[b]

    return inner


def sigma_n_derivative(m: int, y, n: int):
    """m-th derivative of ``sigma_n(y) = n log(1 + y/n)``.

    ``(-1)^(1+m) (m-1)! (1 + y/n)^(-m) n^(1-m)``.
    """
    if m < 1:
        raise DomainError("derivative order must be >= 1")
    y = np.asarray(y, dtype=float)
    base = 1.0 + y / n
    if np.any(base <= 0):
        raise DomainError("sigma_n needs 1 + y/n > 0")
    val = (-1) ** (1 + m) * math.factorial(m - 1) * base ** (-m) * float(n) ** (1 - m)
    return _scalar(val)


class StandardMaxStable:
    """``G(x) = exp(-||x||_D)`` on the negative orthant."""

    def __init__(self, dnorm: DNorm):
        self.dnorm = dnorm
        self.d = dnorm.d

    def __repr__(self):
        return f"StandardMaxStable({self.dnorm})"

    def cdf(self, x):
        """Distribution function; positive coordinates are treated as 0."""
        x = np.minimum(np.asarray(x, dtype=float), 0.0)
        neg_inf = np.any(np.isneginf(x), axis=-1)
        xs = np.where(np.isneginf(x), -1.0, x)
        return _scalar(np.where(neg_inf, 0.0, np.exp(-self.dnorm(xs))))

    def density(self, x):
        """``G(x) * sum_P prod_{B in P} d^B phi(x)`` on the open negative orthant."""
        _require_density(self.dnorm)
        x = np.asarray(x, dtype=float)
        if np.any(x >= 0):
            raise DomainError("max-stable density needs x < 0 componentwise")
        g = np.exp(-self.dnorm(x))
        val = faa_di_bruno(lambda m: g, g, _phi_partials(self.dnorm, x), range(self.d))
        return _clamp_density(val)

    def box_mass(self, box: BoxRegion) -> float:
        return rectangle_mass(self.cdf, box.lower, box.upper)

    def epsilon_box(self, eps: float = 1e-3, tol: float = 1e-10) -> BoxRegion:
        """Smallest diagonal box ``[-t, 0]^d`` with ``G``-mass at least ``1 - eps``."""
        if not 0 < eps < 1:
            raise DomainError("eps must lie in (0, 1)")

        def mass(t):
            return rectangle_mass(self.cdf, np.full(self.d, -t), np.zeros(self.d))

        lo, hi = 0.0, 1.0
        while mass(hi) < 1 - eps:
            lo, hi = hi, 2 * hi
        while hi - lo > tol * max(1.0, hi):
            mid = 0.5 * (lo + hi)
            if mass(mid) >= 1 - eps:
                hi = mid
            else:
                lo = mid
        return BoxRegion.cube(-hi, 0.0, self.d)


def max_stable_cdf(G: StandardMaxStable, x):
    return G.cdf(x)


def max_stable_density(G: StandardMaxStable, x):
    return G.density(x)


class GpcMaximaLaw:
    """Law of ``n (M^(n) - 1)`` for a generalized Pareto copula.

    ``F^(n)(x) = (1 - ||x||_D / n)^n`` on ``x <= 0`` with ``1 + x/n >= u0``.
    """

    def __init__(self, dnorm: DNorm, n: int, u0=None):
        if n < 1:
            raise DomainError("n must be a positive integer")
        self.dnorm = dnorm
        self.d = dnorm.d
        self.n = int(n)
        self.u0 = np.full(self.d, 0.5) if u0 is None else np.broadcast_to(
            np.asarray(u0, dtype=float), (self.d,)
        ).copy()
        if np.any(self.u0 <= 0) or np.any(self.u0 >= 1):
            raise DomainError("u0 must lie in the open unit cube")

    def __repr__(self):
        return f"GpcMaximaLaw({self.dnorm}, n={self.n})"

    @property
    def region_lower(self) -> np.ndarray:
        """Lower corner ``n (u0 - 1)`` of the region where the GPC form is exact."""
        return self.n * (self.u0 - 1.0)

    def _region(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.d:
            raise DomainError(f"expected points with last axis {self.d}")
        if np.any(x > 0) or np.any(x < self.region_lower - 1e-12 * self.n):
            raise DomainError(
                f"x must lie in [{self.region_lower.tolist()}, 0] where the GPC form holds"
            )
        return x

    def cdf(self, x):
        x = self._region(x)
        base = np.clip(1.0 - self.dnorm(x) / self.n, 0.0, 1.0)
        return _scalar(base**self.n)

    def density(self, x):
        """Exact ``f^(n)`` through ``exp o sigma_n o phi`` and nested Faà di Bruno sums."""
        _require_density(self.dnorm)
        x = self._region(x)
        if np.any(x >= 0):
            raise DomainError("density needs x < 0 componentwise")
        n = self.n
        phi = -self.dnorm(x)
        inner_phi = _phi_partials(self.dnorm, x)
        cache = {}

        def phi_n_partial(b):
            if b not in cache:
                cache[b] = faa_di_bruno(
                    lambda m: sigma_n_derivative(m, phi, n), phi, inner_phi, b
                )
            return cache[b]

        F = (1.0 + phi / n) ** n
        val = faa_di_bruno(lambda m: F, F, phi_n_partial, range(self.d))
        return _clamp_density(val)


def gpc_maxima_cdf(law: GpcMaximaLaw, x):
    return law.cdf(x)


def gpc_maxima_density(law: GpcMaximaLaw, x):
    return law.density(x)


def _falling(n: int, m: int) -> float:
    return float(math.prod(range(n - m + 1, n + 1))) if m <= n else 0.0


class MaximaCopula(Copula):
    """Copula of componentwise maxima, ``C^(n)(u) = C^n(u^(1/n))``."""

    def __init__(self, base: Copula, n: int):
        if n < 1:
            raise DomainError("n must be a positive integer")
        self.base = base
        self.n = int(n)
        self.d = base.d
        self.dnorm = base.dnorm
        self.name = f"maxima[{base.name}, n={n}]"

    def __repr__(self):
        return f"MaximaCopula({self.base!r}, n={self.n})"

    def cdf(self, u):
        u = self._point(u)
        return _scalar(np.asarray(self.base.cdf(u ** (1.0 / self.n))) ** self.n)

    def block_partial(self, block, u):
        """Outer ``y -> y^n`` composed with ``C`` at ``w = u^(1/n)``, times the
        chain factors ``w_i / (n u_i)`` of the coordinate map."""
        u = self._interior(u)
        block = index_block(block, self.d)
        n = self.n
        # u^(1/n) rounds to 1 for u within n ulps of 1; stay inside the open cube
        w = np.minimum(u ** (1.0 / n), np.nextafter(1.0, 0.0))
        y = np.asarray(self.base.cdf(w), dtype=float)
        cache = {}

        def inner(b):
            if b not in cache:
                cache[b] = self.base.block_partial(b, w)
            return cache[b]

        val = faa_di_bruno(lambda m: _falling(n, m) * y ** (n - m), y, inner, block)
        chain = np.prod(w[..., list(block)] / (n * u[..., list(block)]), axis=-1)
        return _scalar(val * chain)

    def density(self, u):
        return _clamp_density(self.block_partial(range(self.d), u))


def maxima_copula_cdf(mc: MaximaCopula, u):
    return mc.cdf(u)


def maxima_copula_density(mc: MaximaCopula, u):
    return mc.density(u)


def maxima_copula_log_form(base: Copula, n: int, u):
    """``C^n(1 + log(u)/n)``, the distribution of ``n (M^(n) - 1)`` at ``log u``."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0) or np.any(u > 1):
        raise DomainError("log form needs u in (0, 1]")
    w = 1.0 + np.log(u) / n
    if np.any(w < 0):
        raise DomainError(f"1 + log(u)/n leaves the unit cube for n={n}")
    return _scalar(np.asarray(base.cdf(w)) ** n)


def marginal_transform_maxima(eta, quantiles: Sequence, n: int):
    """``(F_1^{-1}(1 + eta_1/n), ..., F_d^{-1}(1 + eta_d/n))``.

    ``eta`` may carry leading axes; the last axis indexes coordinates.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.shape[-1] != len(quantiles):
        raise DomainError("one quantile function per coordinate is required")
    q = 1.0 + eta / n
    if np.any(eta > 0) or np.any(q < 0):
        raise DomainError("need eta <= 0 and 1 + eta/n in [0, 1]")
    out = np.empty_like(q)
    for j, fq in enumerate(quantiles):
        out[..., j] = fq(q[..., j])
    return out


class GeneralizedMaxStable:
    """Max-stable law with GEV margins: ``G*(x) = G(log G*_{gamma_j}((x_j - loc_j)/scale_j))``."""

    def __init__(self, G: StandardMaxStable, gammas, locs=None, scales=None):
        self.G = G
        self.d = G.d
        self.gammas = np.broadcast_to(np.asarray(gammas, dtype=float), (self.d,)).copy()
        self.locs = np.zeros(self.d) if locs is None else np.broadcast_to(
            np.asarray(locs, dtype=float), (self.d,)).copy()
        self.scales = np.ones(self.d) if scales is None else np.broadcast_to(
            np.asarray(scales, dtype=float), (self.d,)).copy()

    @classmethod
    def from_margins(cls, G: StandardMaxStable, margins: Sequence[MarginFamily]):
        lim = np.array([m.limit for m in margins])
        return cls(G, lim[:, 0], lim[:, 1], lim[:, 2])

    def epsilon_box(self, eps: float = 1e-3) -> BoxRegion:
        """Box carrying ``G*``-mass at least ``1 - eps``.

        Half of ``eps`` goes to the lower corner (the standard box of ``G``
        mapped through the GEV quantiles), half to the upper marginal tails.
        """
        std = self.G.epsilon_box(eps / 2)
        lo = [gev_quantile(self.gammas[j], np.exp(std.lower[j]), self.locs[j], self.scales[j])
              for j in range(self.d)]
        hi = [gev_quantile(self.gammas[j], np.exp(-eps / (2 * self.d)), self.locs[j],
                           self.scales[j]) for j in range(self.d)]
        return BoxRegion(lo, hi, "real")

    def _log_margins(self, x):
        x = np.asarray(x, dtype=float)
        cols = [gev_logcdf(self.gammas[j], x[..., j], self.locs[j], self.scales[j])
                for j in range(self.d)]
        return np.stack([np.asarray(c, dtype=float) for c in cols], axis=-1)

    def cdf(self, x):
        return self.G.cdf(self._log_margins(x))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        ell = self._log_margins(x)
        ok = np.all((ell < 0) & np.isfinite(ell), axis=-1)
        safe = np.where(ok[..., None], ell, -1.0)
        g = np.asarray(self.G.density(safe), dtype=float)
        # d/dx log G*(x) = (1 + gamma z)^(-1/gamma - 1) / scale = (-ell)^(1 + gamma) / scale
        jac = np.prod((-safe) ** (1.0 + self.gammas) / self.scales, axis=-1)
        return _scalar(np.where(ok, g * jac, 0.0))


class NormalizedMaximaLaw:
    """``Q^(n)(x) = G(u_n(x))`` with ``u_n^(j)(x_j) = -n (1 - F_j(a_j x_j + b_j))``."""

    def __init__(self, G: StandardMaxStable, margins: Sequence[MarginFamily], n: int,
                 a=None, b=None):
        if len(margins) != G.d:
            raise DomainError("one margin per coordinate is required")
        if n < 1:
            raise DomainError("n must be a positive integer")
        self.G = G
        self.d = G.d
        self.margins = list(margins)
        self.n = int(n)
        if a is None or b is None:
            ab = np.array([m.norming(self.n) for m in self.margins])
            a = ab[:, 0] if a is None else a
            b = ab[:, 1] if b is None else b
        self.a = np.broadcast_to(np.asarray(a, dtype=float), (self.d,)).copy()
        self.b = np.broadcast_to(np.asarray(b, dtype=float), (self.d,)).copy()
        if np.any(self.a <= 0):
            raise DomainError("norming scales a_n must be positive")

    def limit(self) -> GeneralizedMaxStable:
        return GeneralizedMaxStable.from_margins(self.G, self.margins)

    def _u_n(self, x):
        x = np.asarray(x, dtype=float)
        t = self.a * x + self.b
        cols = [np.asarray(m.sf(t[..., j]), dtype=float) for j, m in enumerate(self.margins)]
        return -self.n * np.stack(cols, axis=-1), t

    def cdf(self, x):
        u, _ = self._u_n(x)
        return self.G.cdf(u)

    def density(self, x):
        _require_density(self.G.dnorm)
        u, t = self._u_n(x)
        f = np.stack([np.asarray(m.pdf(t[..., j]), dtype=float)
                      for j, m in enumerate(self.margins)], axis=-1)
        ok = np.all(u < 0, axis=-1) & np.all(f > 0, axis=-1)
        safe = np.where(ok[..., None], u, -1.0)
        g = np.asarray(self.G.density(safe), dtype=float)
        if not np.all(np.isfinite(f)):
            raise NumericalError("marginal density is not finite")
        jac = np.prod(self.n * self.a * f, axis=-1)
        return _scalar(np.where(ok, g * jac, 0.0))


def normalized_maxima_cdf(law: NormalizedMaximaLaw, x):
    return law.cdf(x)


def normalized_maxima_density(law: NormalizedMaximaLaw, x):
    return law.density(x)
