"""Seedable samplers for copulas, block maxima and max-stable vectors.

Randomness comes from :class:`RandomSource`, a (seed, stream) pair mapped to
a Philox counter-based generator. Every sampler builds a fresh generator from
its source, so output is a pure function of the parameters, seed, stream id
and sample size.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .copulas import Copula, ExtremeValueCopula, GumbelHougaardCopula
from .dnorms import DNorm
from .errors import DomainError, NumericalError, UnsupportedFamilyError
from .maxima import marginal_transform_maxima
from .margins import MarginFamily

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RandomSource:
    """Counter-based random stream keyed by ``(seed, stream)``."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK64 or not 0 <= self.stream <= _MASK64:
            raise DomainError("seed and stream must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        key = (int(self.stream) << 64) | int(self.seed)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, stream: int) -> "RandomSource":
        return RandomSource(self.seed, stream)


@dataclass
class SampleMatrix:
    """``k x d`` sample with a provenance record."""

    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def _check_k(k):
    if int(k) != k or k < 1:
        raise DomainError("sample size k must be a positive integer")
    return int(k)


def positive_stable(alpha: float, size, rng: np.random.Generator) -> np.ndarray:
    """Positive stable variates with Laplace transform ``exp(-t^alpha)``, ``0 < alpha < 1``.

    Kanter's representation.
    """
    theta = rng.uniform(0.0, np.pi, size)
    w = rng.standard_exponential(size)
    a = np.sin(alpha * theta) / np.sin(theta) ** (1.0 / alpha)
    b = (np.sin((1.0 - alpha) * theta) / w) ** ((1.0 - alpha) / alpha)
    return a * b


def sample_gumbel_hougaard(p: float, d: int, k: int, source: RandomSource) -> SampleMatrix:
    """Exact Gumbel-Hougaard draws via the positive-stable frailty construction."""
    if p < 1:
        raise DomainError("Gumbel-Hougaard needs p >= 1")
    k = _check_k(k)
    rng = source.generator()
    if p == 1:
        u = rng.uniform(size=(k, d))
    else:
        alpha = 1.0 / p
        s = positive_stable(alpha, (k, 1), rng)
        e = rng.standard_exponential((k, d))
        u = np.exp(-((e / s) ** alpha))
    prov = {"family": "gumbel-hougaard", "p": float(p), "d": d, "seed": source.seed,
            "stream": source.stream}
    return SampleMatrix(u, prov)


def _conditional_inverse(copula: Copula, u1: np.ndarray, v: np.ndarray,
                         width: float = 1e-12) -> tuple[np.ndarray, float]:
    """Solve ``dC/du1(u1, u2) = v`` for ``u2`` by bisection then one Newton step."""
    lo = np.zeros_like(u1)
    hi = np.ones_like(u1)

    def h(u2):
        return copula.block_partial((0,), np.stack([u1, u2], axis=-1))

    lo_v = h(np.full_like(u1, 1e-300))
    hi_v = h(np.full_like(u1, 1 - 1e-16))
    if np.any(lo_v > v + 1e-9) or np.any(hi_v < v - 1e-9):
        raise NumericalError("conditional distribution does not bracket the target")
    while np.max(hi - lo) > width:
        mid = 0.5 * (lo + hi)
        below = h(mid) < v
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    u2 = 0.5 * (lo + hi)
    res = h(u2) - v
    dens = copula.block_partial((0, 1), np.stack([u1, u2], axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        cand = np.clip(u2 - res / dens, lo, hi)
    cand = np.where(np.isfinite(cand) & (cand > 0) & (cand < 1), cand, u2)
    res_c = h(cand) - v
    better = np.abs(res_c) < np.abs(res)
    u2 = np.where(better, cand, u2)
    res = np.where(better, res_c, res)
    return u2, float(np.max(np.abs(res))) if res.size else 0.0


def sample_copula_conditional_2d(copula: Copula, k: int, source: RandomSource) -> SampleMatrix:
    """Conditional-distribution sampler for bivariate copulas with exact partials."""
    if copula.d != 2:
        raise UnsupportedFamilyError("conditional inversion is implemented for d = 2 only")
    k = _check_k(k)
    rng = source.generator()
    # keep away from the boundary where block partials are undefined
    tiny = np.finfo(float).eps
    z = np.clip(rng.uniform(size=(k, 2)), tiny, 1 - tiny)
    u2, resid = _conditional_inverse(copula, z[:, 0], z[:, 1])
    prov = {"family": copula.name, "copula": repr(copula), "method": "conditional-inversion",
            "seed": source.seed, "stream": source.stream, "max_residual": resid}
    return SampleMatrix(np.column_stack([z[:, 0], u2]), prov)


Sampler = Callable[[int, RandomSource], SampleMatrix]


def copula_sampler(copula: Copula) -> Sampler:
    """Pick an exact sampler for a copula."""
    if isinstance(copula, GumbelHougaardCopula):
        return lambda k, src: sample_gumbel_hougaard(copula.p, copula.d, k, src)
    if isinstance(copula, ExtremeValueCopula) and copula.dnorm.family == "logistic":
        return lambda k, src: sample_gumbel_hougaard(copula.dnorm.p, copula.d, k, src)
    if isinstance(copula, ExtremeValueCopula) and copula.dnorm.family == "sup":
        def comonotone(k, src):
            u = src.generator().uniform(size=(_check_k(k), 1))
            return SampleMatrix(np.repeat(u, copula.d, axis=1),
                                {"family": "comonotone", "seed": src.seed, "stream": src.stream})
        return comonotone
    if copula.d == 2:
        return lambda k, src: sample_copula_conditional_2d(copula, k, src)
    raise UnsupportedFamilyError(f"no sampler for {copula!r}")


def sample_block_maxima(base_sampler: Sampler, n: int, k: int,
                        source: RandomSource) -> tuple[SampleMatrix, SampleMatrix]:
    """``k`` componentwise maxima of ``n`` fresh base draws each.

    Returns the raw maxima in ``[0, 1]^d`` and the rescaled ``n (M - 1)``.
    """
    if n < 1:
        raise DomainError("block size n must be a positive integer")
    k = _check_k(k)
    base = base_sampler(n * k, source)
    vals = base.values.reshape(k, n, base.d).max(axis=1)
    prov = dict(base.provenance, n=int(n), k=k)
    return SampleMatrix(vals, prov), SampleMatrix(n * (vals - 1.0), dict(prov, rescaled=True))


def sample_max_stable(dnorm: DNorm, k: int, source: RandomSource) -> SampleMatrix:
    """Rows with distribution ``G(x) = exp(-||x||_D)``, as ``log`` of extreme-value copula draws."""
    sampler = copula_sampler(ExtremeValueCopula(dnorm))
    u = sampler(k, source)
    with np.errstate(divide="ignore"):
        eta = np.log(u.values)
    return SampleMatrix(eta, dict(u.provenance, dnorm=str(dnorm), law="standard-max-stable"))


def transform_margins(sample: SampleMatrix, margins: Sequence, n: int) -> SampleMatrix:
    """Apply ``F_j^{-1}(1 + eta_j / n)`` row by row.

    ``margins`` holds quantile callables or :class:`MarginFamily` objects.
    """
    quantiles = [m.quantile if isinstance(m, MarginFamily) else m for m in margins]
    vals = np.asarray(sample.values, dtype=float)
    bad = np.any(vals > 0, axis=1) | np.any(1.0 + vals / n < 0, axis=1)
    if np.any(bad):
        rows = np.flatnonzero(bad)
        raise DomainError(f"rows {rows[:10].tolist()} leave the quantile domain")
    out = marginal_transform_maxima(vals, quantiles, n)
    return SampleMatrix(out, dict(sample.provenance, transformed_n=int(n)))
