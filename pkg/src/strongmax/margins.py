"""Univariate pieces: the GEV family, marginal families with norming
constants, and von Mises ratio diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DomainError, UnsupportedFamilyError

#: Below this |gamma| the Gumbel formulas are used.
GAMMA_ZERO_THRESHOLD = 1e-8


def _std(x, loc, scale):
    if scale <= 0:
        raise DomainError("GEV scale must be positive")
    return (np.asarray(x, dtype=float) - loc) / scale


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def gev_logcdf(gamma: float, x, loc: float = 0.0, scale: float = 1.0):
    """``log G*_gamma((x - loc)/scale) = -(1 + gamma z)_+^(-1/gamma)``.

    Returns ``-inf`` below a lower endpoint and ``0`` above an upper one.
    """
    z = _std(x, loc, scale)
    if abs(gamma) < GAMMA_ZERO_THRESHOLD:
        return _out(-np.exp(-z))
    t = 1.0 + gamma * z
    inside = t > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        val = -np.exp(-np.log1p(gamma * np.where(inside, z, 0.0)) / gamma)
    edge = -np.inf if gamma > 0 else 0.0
    return _out(np.where(inside, val, edge))


def gev_cdf(gamma: float, x, loc: float = 0.0, scale: float = 1.0):
    """GEV distribution function ``exp(-(1 + gamma x)_+^(-1/gamma))``."""
    return _out(np.exp(gev_logcdf(gamma, x, loc, scale)))


def gev_pdf(gamma: float, x, loc: float = 0.0, scale: float = 1.0):
    z = _std(x, loc, scale)
    if abs(gamma) < GAMMA_ZERO_THRESHOLD:
        return _out(np.exp(-z - np.exp(-z)) / scale)
    t = 1.0 + gamma * z
    inside = t > 0
    ts = np.where(inside, t, 1.0)
    val = np.exp(-(1.0 / gamma + 1.0) * np.log(ts) - ts ** (-1.0 / gamma)) / scale
    return _out(np.where(inside, val, 0.0))


def gev_quantile(gamma: float, q, loc: float = 0.0, scale: float = 1.0):
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0) | (q >= 1)) or not np.all(np.isfinite(q)):
        raise DomainError("GEV quantile needs q in (0, 1)")
    ll = np.log(-np.log(q))
    if abs(gamma) < GAMMA_ZERO_THRESHOLD:
        z = -ll
    else:
        z = np.expm1(-gamma * ll) / gamma
    return _out(loc + scale * z)


@dataclass(frozen=True)
class MarginFamily:
    """A univariate law with everything the maxima pipeline needs.

    ``limit`` holds ``(gamma, loc, scale)`` of the GEV law that
    ``F^n(a_n x + b_n)`` approaches under the family's default norming.
    """

    name: str
    param: float | None
    cdf: Callable
    pdf: Callable
    sf: Callable
    quantile: Callable
    gamma: float
    endpoint: float
    norming: Callable[[int], tuple[float, float]]
    limit: tuple[float, float, float]
    tail_integral: Callable | None = None


def _clipq(q):
    q = np.asarray(q, dtype=float)
    if np.any((q < 0) | (q > 1)):
        raise DomainError("quantile argument outside [0, 1]")
    return q


def frechet(alpha: float = 1.0) -> MarginFamily:
    """``F(x) = exp(-x^-alpha)`` on ``x > 0``; max-stable under ``a_n = n^(1/alpha)``."""
    if alpha <= 0:
        raise DomainError("Frechet alpha must be positive")

    def cdf(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return _out(np.where(x > 0, np.exp(-np.where(x > 0, x, 1.0) ** -alpha), 0.0))

    def pdf(x):
        x = np.asarray(x, dtype=float)
        xs = np.where(x > 0, x, 1.0)
        return _out(np.where(x > 0, alpha * xs ** (-alpha - 1) * np.exp(-(xs**-alpha)), 0.0))

    def sf(x):
        x = np.asarray(x, dtype=float)
        xs = np.where(x > 0, x, 1.0)
        return _out(np.where(x > 0, -np.expm1(-(xs**-alpha)), 1.0))

    def quantile(q):
        q = _clipq(q)
        with np.errstate(divide="ignore"):
            return _out((-np.log(q)) ** (-1.0 / alpha))

    g = 1.0 / alpha
    return MarginFamily(
        "frechet", alpha, cdf, pdf, sf, quantile, g, np.inf,
        lambda n: (float(n) ** g, 0.0), (g, 1.0, g),
    )


def pareto(alpha: float = 1.0) -> MarginFamily:
    """``F(x) = 1 - x^-alpha`` on ``x >= 1``."""
    if alpha <= 0:
        raise DomainError("Pareto alpha must be positive")

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return _out(np.where(x >= 1, 1.0 - np.maximum(x, 1.0) ** -alpha, 0.0))

    def sf(x):
        x = np.asarray(x, dtype=float)
        return _out(np.where(x >= 1, np.maximum(x, 1.0) ** -alpha, 1.0))

    def pdf(x):
        x = np.asarray(x, dtype=float)
        return _out(np.where(x >= 1, alpha * np.maximum(x, 1.0) ** (-alpha - 1), 0.0))

    def quantile(q):
        q = _clipq(q)
        with np.errstate(divide="ignore"):
            return _out((1.0 - q) ** (-1.0 / alpha))

    g = 1.0 / alpha
    return MarginFamily(
        "pareto", alpha, cdf, pdf, sf, quantile, g, np.inf,
        lambda n: (float(quantile(1.0 - 1.0 / n)) if n > 1 else 1.0, 0.0), (g, 1.0, g),
    )


def exponential() -> MarginFamily:
    """Standard exponential; Gumbel domain with ``a_n = 1, b_n = log n``."""

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return _out(np.where(x > 0, -np.expm1(-np.maximum(x, 0.0)), 0.0))

    def sf(x):
        x = np.asarray(x, dtype=float)
        return _out(np.exp(-np.maximum(x, 0.0)))

    def pdf(x):
        x = np.asarray(x, dtype=float)
        return _out(np.where(x >= 0, np.exp(-np.maximum(x, 0.0)), 0.0))

    def quantile(q):
        q = _clipq(q)
        with np.errstate(divide="ignore"):
            return _out(-np.log1p(-q))

    return MarginFamily(
        "exponential", None, cdf, pdf, sf, quantile, 0.0, np.inf,
        lambda n: (1.0, float(np.log(n))), (0.0, 0.0, 1.0),
        tail_integral=lambda x: float(np.exp(-max(x, 0.0)) + max(-x, 0.0)),
    )


def uniform(alpha: float = 1.0) -> MarginFamily:
    """``F(x) = 1 - (1 - x)^alpha`` on ``[0, 1]``; ``alpha = 1`` is Unif(0, 1).

    Weibull domain with ``gamma = -1/alpha``, ``b_n = 1``, ``a_n = n^(-1/alpha)``.
    """
    if alpha <= 0:
        raise DomainError("uniform-type alpha must be positive")

    def cdf(x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return _out(1.0 - (1.0 - x) ** alpha)

    def sf(x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return _out((1.0 - x) ** alpha)

    def pdf(x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0) & (x < 1)
        xs = np.where(inside, x, 0.0)
        return _out(np.where(inside, alpha * (1.0 - xs) ** (alpha - 1), 0.0))

    def quantile(q):
        q = _clipq(q)
        return _out(1.0 - (1.0 - q) ** (1.0 / alpha))

    g = -1.0 / alpha
    return MarginFamily(
        "uniform", alpha, cdf, pdf, sf, quantile, g, 1.0,
        lambda n: (float(n) ** g, 1.0), (g, -1.0, -g),
    )


_FAMILIES = {
    "frechet": frechet,
    "pareto": pareto,
    "exponential": exponential,
    "uniform": uniform,
}


def margin_family(tag: str, param: float | None = None) -> MarginFamily:
    """Look up a named marginal family (``frechet``, ``pareto``, ``exponential``, ``uniform``)."""
    try:
        factory = _FAMILIES[tag]
    except KeyError:
        raise UnsupportedFamilyError(f"unknown marginal family {tag!r}") from None
    if tag == "exponential":
        if param is not None:
            raise DomainError("the exponential family takes no parameter")
        return factory()
    return factory(1.0 if param is None else float(param))


def default_norming_constants(family, n: int, param: float | None = None) -> tuple[float, float]:
    """Textbook norming constants ``(a_n, b_n)`` for a named family."""
    if n < 1:
        raise DomainError("n must be a positive integer")
    fam = family if isinstance(family, MarginFamily) else margin_family(family, param)
    return fam.norming(n)


def von_mises_diagnostic(cdf, pdf, gamma: float, endpoint: float, points, *, sf=None, tail_integral=None):
    """Von Mises ratios along ``points``.

    * ``gamma > 0``: ``x f(x) / (1 - F(x))``, target ``1/gamma`` (infinite endpoint);
    * ``gamma < 0``: ``(x0 - x) f(x) / (1 - F(x))``, target ``-1/gamma`` (finite endpoint);
    * ``gamma = 0``: ``f(x) / (1 - F(x))^2 * int_x^{x0} (1 - F(t)) dt``, target 1.

    Returns a list of ``(point, ratio, target)``.
    """
    if gamma > 0 and np.isfinite(endpoint):
        raise DomainError("gamma > 0 requires an infinite right endpoint")
    if gamma < 0 and not np.isfinite(endpoint):
        raise DomainError("gamma < 0 requires a finite right endpoint")
    surv = sf if sf is not None else (lambda x: 1.0 - cdf(x))
    rows = []
    for x in points:
        x = float(x)
        if x >= endpoint:
            raise DomainError(f"point {x} is not below the endpoint {endpoint}")
        s = float(surv(x))
        if s <= 0:
            raise DomainError(f"survival function vanishes at {x}")
        f = float(pdf(x))
        if gamma > 0:
            ratio, target = x * f / s, 1.0 / gamma
        elif gamma < 0:
            ratio, target = (endpoint - x) * f / s, -1.0 / gamma
        else:
            if tail_integral is not None:
                tail = float(tail_integral(x))
            else:
                tail, _ = integrate.quad(
                    lambda t: float(surv(t)), x, endpoint, epsabs=0.0, epsrel=1e-13, limit=200
                )
            ratio, target = f / s**2 * tail, 1.0
        rows.append((x, ratio, target))
    return rows


def von_mises_for_family(fam: MarginFamily, points, use_closed_tail: bool = True):
    return von_mises_diagnostic(
        fam.cdf, fam.pdf, fam.gamma, fam.endpoint, points, sf=fam.sf,
        tail_integral=fam.tail_integral if use_closed_tail else None,
    )
