"""Numerical functionals behind the convergence statements.

Total variation over a box with an explicit tail allowance, grid sup
distances between distribution functions, the rank-based empirical copula,
the truncated ratio integral ``rho_delta`` and log density-ratio moments.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boxes import BoxRegion, rectangle_mass
from .errors import DomainError, NonFiniteError, NumericalError
from .quadrature import QuadratureSpec, evaluate_on_nodes, tensor_rule
from .sampling import RandomSource

#: Distance of unit-cube grids from the cube boundary.
DEFAULT_INSET = 5e-3


@dataclass(frozen=True)
class TvEstimate:
    """Total-variation bracket ``[box - err, box + tail + err]``."""

    box_integral: float
    tail_bound: float
    refinement_error: float

    @property
    def lower(self) -> float:
        return max(0.0, self.box_integral - self.refinement_error)

    @property
    def upper(self) -> float:
        return self.box_integral + self.tail_bound + self.refinement_error

    def as_row(self) -> dict:
        return {"box_integral": self.box_integral, "tail_bound": self.tail_bound,
                "refinement_error": self.refinement_error, "lower": self.lower,
                "upper": self.upper}


def _half_abs_diff(f, g, box, spec):
    nodes, weights = tensor_rule(box, spec)
    fv = evaluate_on_nodes(f, nodes, "first density")
    gv = evaluate_on_nodes(g, nodes, "second density")
    return 0.5 * float(np.sum(weights * np.abs(fv - gv)))


def tv_distance_box(density_f, density_g, cdf_f, cdf_g, box: BoxRegion,
                    spec: QuadratureSpec | None = None) -> TvEstimate:
    """Bracket the total-variation distance between two laws.

    The box part ``0.5 * int_box |f - g|`` is computed at two quadrature
    resolutions; the finer one is reported and their difference is the
    refinement error. Mass outside the box, obtained from the cdfs by
    inclusion-exclusion, bounds the remainder.
    """
    spec = spec or QuadratureSpec()
    coarse = _half_abs_diff(density_f, density_g, box, spec)
    fine = _half_abs_diff(density_f, density_g, box, spec.refined())
    out_f = max(0.0, 1.0 - rectangle_mass(cdf_f, box.lower, box.upper))
    out_g = max(0.0, 1.0 - rectangle_mass(cdf_g, box.lower, box.upper))
    return TvEstimate(fine, 0.5 * (out_f + out_g), abs(fine - coarse))


def unit_cube_epsilon_box(cdf, d: int, eps: float = 1e-3, tol: float = 1e-12) -> BoxRegion:
    """Largest inset box ``[t, 1 - t]^d`` whose ``cdf``-mass is at least ``1 - eps``."""
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")

    def outside(t):
        return 1.0 - rectangle_mass(cdf, np.full(d, t), np.full(d, 1.0 - t))

    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if outside(mid) <= eps:
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise NumericalError("no inset box reaches the requested mass")
    return BoxRegion.cube(lo, 1.0 - lo, d, "unit-cube")


def unit_grid_axes(m: int = 101, d: int = 2, inset: float = DEFAULT_INSET) -> list[np.ndarray]:
    """``d`` copies of ``m`` equispaced points on ``[inset, 1 - inset]``."""
    if m < 2 or not 0 <= inset < 0.5:
        raise DomainError("need m >= 2 and inset in [0, 0.5)")
    ax = np.linspace(inset, 1.0 - inset, m)
    return [ax] * d


def grid_points(axes) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


def _as_points(grid) -> np.ndarray:
    if isinstance(grid, (list, tuple)) and grid and np.ndim(grid[0]) == 1:
        return grid_points(grid)
    pts = np.asarray(grid, dtype=float)
    return pts[:, None] if pts.ndim == 1 else pts


def sup_distance_grid(F1, F2, grid) -> tuple[float, np.ndarray]:
    """Maximum of ``|F1 - F2|`` over grid nodes and the node attaining it.

    ``grid`` is either a list of 1-D axes (tensor grid) or an ``(N, d)`` array.
    """
    pts = _as_points(grid)
    diff = np.abs(evaluate_on_nodes(F1, pts, "F1") - evaluate_on_nodes(F2, pts, "F2"))
    i = int(np.argmax(diff))
    return float(diff[i]), pts[i]


class EmpiricalCopula:
    """Rank-based empirical copula of a ``k x d`` sample.

    Ranks are ordinal, ties broken by row order, and scaled by ``1/k``.
    """

    def __init__(self, data):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1:
            raise DomainError("empirical copula needs a nonempty k x d array")
        self.k, self.d = data.shape
        order = np.argsort(data, axis=0, kind="stable")
        ranks = np.empty_like(order)
        rows = np.arange(1, self.k + 1)
        for j in range(self.d):
            ranks[order[:, j], j] = rows
        self.ranks = ranks
        self.pseudo = ranks / self.k

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        single = u.ndim == 1
        pts = np.atleast_2d(u)
        if pts.shape[-1] != self.d:
            raise DomainError(f"expected points with last axis {self.d}")
        out = np.empty(len(pts))
        step = max(1, (1 << 22) // max(self.k * self.d, 1))
        for s in range(0, len(pts), step):
            chunk = pts[s:s + step]
            inside = np.all(self.pseudo[None, :, :] <= chunk[:, None, :], axis=-1)
            out[s:s + step] = inside.sum(axis=1) / self.k
        return float(out[0]) if single else out


def empirical_copula_eval(ec: EmpiricalCopula, u):
    return ec(u)


@dataclass(frozen=True)
class GridSupError:
    """Grid sup of ``|C_k - C|`` with the node attaining it.

    ``allowance = d / k`` bounds how far the sup over the continuum can
    exceed the grid value between grid nodes for a step function with
    ``1/k`` jumps, on top of the reference's own modulus of continuity.
    """

    value: float
    point: tuple
    allowance: float

    def __float__(self):
        return self.value


def empirical_copula_sup_error(ec: EmpiricalCopula, reference, grid) -> GridSupError:
    value, pt = sup_distance_grid(ec, reference.cdf if hasattr(reference, "cdf") else reference, grid)
    return GridSupError(value, tuple(float(v) for v in pt), ec.d / ec.k)


@dataclass(frozen=True)
class RhoDeltaEstimate:
    value: float
    refinement_error: float

    def __float__(self):
        return self.value


def _rho_once(p, m, delta, threshold, box, spec):
    nodes, weights = tensor_rule(box, spec)
    pv = evaluate_on_nodes(p, nodes, "numerator density")
    mv = evaluate_on_nodes(m, nodes, "reference density")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = pv / mv
    bad = ~np.isfinite(ratio)
    if np.any(bad):
        where = nodes[np.flatnonzero(bad)[0]]
        raise NonFiniteError(f"density ratio is not finite at {where.tolist()}")
    region = ratio > threshold
    return float(np.sum(weights * np.where(region, ratio**delta * pv, 0.0)))


def rho_delta(density_p, density_m, delta: float, box: BoxRegion,
              spec: QuadratureSpec | None = None, threshold: float | None = None) -> RhoDeltaEstimate:
    """``int_{p/m > exp(1/delta)} (p/m)^delta p`` over ``box``.

    The indicator is applied nodewise; the refinement error compares two
    quadrature resolutions. ``threshold`` overrides ``exp(1/delta)``.
    """
    if not 0 < delta <= 1:
        raise DomainError("delta must lie in (0, 1]")
    spec = spec or QuadratureSpec()
    thr = np.exp(1.0 / delta) if threshold is None else float(threshold)
    coarse = _rho_once(density_p, density_m, delta, thr, box, spec)
    fine = _rho_once(density_p, density_m, delta, thr, box, spec.refined())
    return RhoDeltaEstimate(fine, abs(fine - coarse))


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    stderr: float
    k: int

    def __float__(self):
        return self.value


def log_ratio_moments(alpha: int, density_num, density_den, sampler, k: int,
                      source: RandomSource) -> MomentEstimate:
    """Monte Carlo ``E[log^alpha(num(U)/den(U))]`` for ``U`` drawn from the numerator law."""
    if int(alpha) != alpha or alpha < 1:
        raise DomainError("alpha must be a positive integer")
    u = np.asarray(sampler(k, source).values, dtype=float)
    num = evaluate_on_nodes(density_num, u, "numerator density")
    den = evaluate_on_nodes(density_den, u, "denominator density")
    if np.any(num <= 0) or np.any(den <= 0):
        raise DomainError("densities must be strictly positive at sampled points")
    vals = np.log(num / den) ** int(alpha)
    return MomentEstimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(len(vals)))
                          if len(vals) > 1 else float("nan"), len(vals))


@dataclass
class DensityGrid:
    """Values of a density (or ratio) on a tensor grid, row-major."""

    axes: list
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axes = [np.asarray(a, dtype=float) for a in self.axes]
        shape = tuple(len(a) for a in self.axes)
        self.values = np.asarray(self.values, dtype=float).reshape(shape)
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteError("density grid holds non-finite values")

    def summary(self) -> dict:
        imax = np.unravel_index(np.argmax(self.values), self.values.shape)
        imin = np.unravel_index(np.argmin(self.values), self.values.shape)
        return {
            "max": float(self.values[imax]),
            "argmax": [float(a[i]) for a, i in zip(self.axes, imax)],
            "min": float(self.values[imin]),
            "argmin": [float(a[i]) for a, i in zip(self.axes, imin)],
        }

    def value_at(self, point) -> float:
        idx = tuple(int(np.argmin(np.abs(a - p))) for a, p in zip(self.axes, point))
        return float(self.values[idx])

    def to_csv(self, path) -> Path:
        path = Path(path)
        pts = grid_points(self.axes)
        names = [f"u{j + 1}" for j in range(len(self.axes))]
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(names + [self.metadata.get("quantity", "value")])
            for row, v in zip(pts, self.values.ravel()):
                w.writerow([repr(float(c)) for c in row] + [repr(float(v))])
        return path

    def to_json(self, path) -> Path:
        path = Path(path)
        doc = {"axes": [a.tolist() for a in self.axes], "values": self.values.ravel().tolist(),
               "metadata": self.metadata}
        path.write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")
        return path

    @classmethod
    def from_json(cls, path) -> "DensityGrid":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(doc["axes"], np.asarray(doc["values"]), doc.get("metadata", {}))


def density_grid(density, axes, **metadata) -> DensityGrid:
    vals = evaluate_on_nodes(density, grid_points(axes), "density")
    grid = DensityGrid(axes, vals, dict(metadata))
    grid.metadata.update(grid.summary())
    return grid


def density_ratio_grid(density_num, density_den, axes, **metadata) -> DensityGrid:
    """Nodewise ratio ``num/den``; a zero denominator node raises."""
    pts = grid_points(axes)
    num = evaluate_on_nodes(density_num, pts, "numerator density")
    den = evaluate_on_nodes(density_den, pts, "denominator density")
    zero = den <= 0
    if np.any(zero):
        raise NonFiniteError(f"denominator vanishes at {pts[np.flatnonzero(zero)[0]].tolist()}")
    grid = DensityGrid(axes, num / den, dict(metadata))
    grid.metadata.setdefault("quantity", "ratio")
    grid.metadata.update(grid.summary())
    return grid
