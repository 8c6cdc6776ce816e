"""Deterministic experiment runners behind the command line.

Each runner takes an :class:`ExperimentConfig`, writes its tables atomically
into the output directory and finishes with ``manifest.json``, which echoes
the configuration and lists every file with its SHA-256 digest. Output files
are pure functions of the configuration; only the wall-clock entries of the
manifest vary between reruns.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .boxes import BoxRegion
from .copulas import (Copula, ExtremeValueCopula,
                      GumbelHougaardCopula, InclusionExclusionCopula)
from .dnorms import DNorm, inclusion_exclusion, logistic, sup_norm
from .errors import ConfigError, UnsupportedFamilyError
from .margins import margin_family, von_mises_for_family
from .maxima import GpcMaximaLaw, MaximaCopula, NormalizedMaximaLaw, StandardMaxStable
from .metrics import (DEFAULT_INSET, EmpiricalCopula, density_grid, density_ratio_grid,
                      empirical_copula_sup_error, rho_delta, sup_distance_grid,
                      tv_distance_box, unit_cube_epsilon_box, unit_grid_axes)
from .partitions import DEFAULT_MAX_DIMENSION
from .quadrature import QuadratureSpec
from .sampling import RandomSource, copula_sampler, sample_block_maxima

OUT_ENV = "STRONGMAX_OUT"

EXPERIMENTS = ("figure1", "tv-convergence", "copula-convergence", "consistency",
               "vonmises-check", "normalized-maxima")

COPULA_FAMILIES = ("inclusion-exclusion", "gumbel-hougaard", "logistic", "sup")

# per-experiment defaults; keys absent here fall back to _COMMON
_COMMON = {
    "d": 2, "param": None, "k": (), "seeds": 1, "seed": 0, "grid": 101,
    "inset": DEFAULT_INSET, "quad": 12, "levels": 8, "delta": 0.5, "eps": 1e-3,
    "margins": (), "points": 8, "gamma": None, "u0": None, "format": "csv",
    "out": None, "all_densities": False,
}
DEFAULTS = {
    "figure1": {"family": "inclusion-exclusion", "n": (2, 50, 100)},
    "tv-convergence": {"family": "logistic", "param": 2.0, "n": (4, 16, 64, 256, 1024)},
    "copula-convergence": {"family": "inclusion-exclusion", "n": (2, 50, 100), "grid": 51},
    "consistency": {"family": "gumbel-hougaard", "param": 2.0, "n": (10, 31, 100),
                    "k": (100, 500, 2000), "seeds": 20, "grid": 51},
    "vonmises-check": {"family": "logistic", "n": (1,), "d": 1,
                       "margins": ("pareto:1", "uniform:1", "exponential")},
    "normalized-maxima": {"family": "logistic", "param": 2.0, "n": (10, 100, 1000),
                          "margins": ("exponential", "exponential"), "eps": 1e-6},
}

_INT_KEYS = {"d", "seeds", "seed", "grid", "quad", "levels", "points"}
_FLOAT_KEYS = {"param", "inset", "delta", "eps", "gamma", "u0"}
_LIST_INT_KEYS = {"n", "k"}
_KEYS = {"experiment", "family", "margins", "format", "out", "all_densities"} \
    | _INT_KEYS | _FLOAT_KEYS | _LIST_INT_KEYS


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated settings of one run. ``n`` and ``k`` are schedules."""

    experiment: str
    family: str
    param: float | None
    d: int
    n: tuple[int, ...]
    k: tuple[int, ...]
    seeds: int
    seed: int
    grid: int
    inset: float
    quad: int
    levels: int
    delta: float
    eps: float
    margins: tuple[str, ...]
    points: int
    gamma: float | None
    u0: float | None
    format: str
    out: str | None
    all_densities: bool

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(self.quad, self.levels)

    def echo(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v
                for k, v in dataclasses.asdict(self).items()}


def _convert(key: str, raw, where: str):
    if raw is None or isinstance(raw, (int, float, bool, tuple)) and not isinstance(raw, str):
        return raw
    text = str(raw).strip()
    try:
        if key in _INT_KEYS:
            return int(text)
        if key in _FLOAT_KEYS:
            return None if text.lower() in ("", "none", "auto") else float(text)
        if key in _LIST_INT_KEYS:
            return tuple(int(v) for v in text.split(",") if v.strip())
        if key == "margins":
            return tuple(v.strip() for v in text.split(",") if v.strip())
        if key == "all_densities":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse value {text!r} for {key!r}") from None
    return text


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"{source}:{lineno}"
        if "=" not in body:
            raise ConfigError(f"{where}: expected 'key = value', got {body!r}")
        key, value = (s.strip() for s in body.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        out[key] = _convert(key, value, where)
    return out


def load_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return parse_config_text(text, str(path))


def _increasing(name, seq, lower=1):
    if not seq:
        raise ConfigError(f"field {name}: schedule must be nonempty")
    if seq[0] < lower or any(b <= a for a, b in zip(seq, seq[1:])):
        raise ConfigError(f"field {name}: schedule must be increasing integers >= {lower}, got {list(seq)}")


def build_config(experiment: str, file_values: dict | None = None,
                 overrides: dict | None = None) -> ExperimentConfig:
    """Merge defaults, file values and overrides (in rising precedence) and validate."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"field experiment: unknown experiment {experiment!r}")
    merged = dict(_COMMON)
    merged.update(DEFAULTS[experiment])
    for layer, label in ((file_values or {}, "config file"), (overrides or {}, "flag")):
        for key, value in layer.items():
            key = key.replace("-", "_")
            if key == "experiment":
                if value != experiment:
                    raise ConfigError(f"field experiment: {label} names {value!r} "
                                      f"but the subcommand is {experiment!r}")
                continue
            if key not in _KEYS:
                raise ConfigError(f"field {key}: unknown key")
            if value is not None:
                merged[key] = _convert(key, value, f"{label} {key}")
    cfg = ExperimentConfig(experiment=experiment, **merged)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    """Reject inconsistent settings before any computation."""
    if cfg.family not in COPULA_FAMILIES:
        raise ConfigError(f"field family: unknown family {cfg.family!r}; "
                          f"choose from {', '.join(COPULA_FAMILIES)}")
    if not 1 <= cfg.d <= DEFAULT_MAX_DIMENSION:
        raise ConfigError(f"field d: dimension must lie in [1, {DEFAULT_MAX_DIMENSION}]")
    if cfg.family in ("gumbel-hougaard", "logistic"):
        p = 2.0 if cfg.param is None else cfg.param
        if not p >= 1:
            raise ConfigError("field param: the logistic parameter p must be >= 1")
    _increasing("n", cfg.n)
    if cfg.experiment == "consistency":
        _increasing("k", cfg.k)
        if len(cfg.k) != len(cfg.n):
            raise ConfigError("field k: the k and n schedules must have equal length")
        if cfg.seeds < 1:
            raise ConfigError("field seeds: need at least one seed")
    if cfg.seed < 0:
        raise ConfigError("field seed: must be a nonnegative integer")
    if cfg.grid < 2:
        raise ConfigError("field grid: need at least 2 points per axis")
    if not 0 <= cfg.inset < 0.5:
        raise ConfigError("field inset: must lie in [0, 0.5)")
    if cfg.quad < 2:
        raise ConfigError("field quad: need at least 2 quadrature points per panel")
    if cfg.levels < 0:
        raise ConfigError("field levels: must be nonnegative")
    if not 0 < cfg.delta <= 1:
        raise ConfigError("field delta: must lie in (0, 1]")
    if not 0 < cfg.eps < 1:
        raise ConfigError("field eps: must lie in (0, 1)")
    if cfg.u0 is not None and not 0 < cfg.u0 < 1:
        raise ConfigError("field u0: must lie in (0, 1)")
    if cfg.points < 1:
        raise ConfigError("field points: need at least one point")
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"field format: expected csv or json, got {cfg.format!r}")
    if cfg.experiment in ("vonmises-check", "normalized-maxima"):
        if not cfg.margins:
            raise ConfigError("field margins: at least one marginal family is required")
        fams = [_margin(tag) for tag in cfg.margins]
        if cfg.experiment == "normalized-maxima" and len(fams) != cfg.d:
            raise ConfigError(f"field margins: need {cfg.d} margins, got {len(fams)}")
        if cfg.gamma is not None:
            for tag, fam in zip(cfg.margins, fams):
                if np.sign(cfg.gamma) != np.sign(fam.gamma):
                    raise ConfigError(f"field gamma: declared tail index {cfg.gamma} has the wrong "
                                      f"sign for margin {tag!r} (gamma = {fam.gamma})")


def _margin(tag: str):
    name, _, param = tag.partition(":")
    try:
        return margin_family(name.strip(), float(param) if param else None)
    except (UnsupportedFamilyError, ValueError) as exc:
        raise ConfigError(f"field margins: {exc}") from None


def _dnorm(cfg: ExperimentConfig) -> DNorm:
    if cfg.family in ("logistic", "gumbel-hougaard"):
        return logistic(cfg.d, 2.0 if cfg.param is None else cfg.param)
    if cfg.family == "inclusion-exclusion":
        return inclusion_exclusion(cfg.d)
    return sup_norm(cfg.d)


def _copula(cfg: ExperimentConfig) -> Copula:
    if cfg.family == "inclusion-exclusion":
        return InclusionExclusionCopula(cfg.d)
    if cfg.family in ("gumbel-hougaard", "logistic"):
        return GumbelHougaardCopula(2.0 if cfg.param is None else cfg.param, cfg.d)
    raise UnsupportedFamilyError(f"family {cfg.family!r} has no exact copula density")


def _require_density(cfg: ExperimentConfig) -> None:
    if not _dnorm(cfg).differentiable:
        raise UnsupportedFamilyError(f"family {cfg.family!r} has no exact densities")


# output plumbing

def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def table_bytes(columns, rows, fmt: str) -> bytes:
    if fmt == "json":
        doc = {"columns": list(columns),
               "rows": [[float(v) if isinstance(v, np.floating) else v for v in r] for r in rows]}
        return (json.dumps(doc, sort_keys=True) + "\n").encode("utf-8")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue().encode("utf-8")


def grid_bytes(grid, fmt: str) -> bytes:
    with tempfile.TemporaryDirectory() as tmp:
        p = Path(tmp) / "grid"
        (grid.to_json if fmt == "json" else grid.to_csv)(p)
        return p.read_bytes()


class RunRecorder:
    """Collects files and stage timings; writes the manifest last."""

    def __init__(self, cfg: ExperimentConfig, out_dir: Path):
        self.cfg = cfg
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.stages = []
        self.summary = {}
        self._t0 = None
        self._stage = None

    def stage(self, name: str):
        rec = self

        class _Stage:
            def __enter__(self):
                rec._t0 = time.perf_counter()

            def __exit__(self, *exc):
                rec.stages.append({"stage": name, "seconds": time.perf_counter() - rec._t0})
                return False

        return _Stage()

    def write(self, stem: str, data: bytes, columns, units: str) -> Path:
        path = self.out / f"{stem}.{self.cfg.format}"
        _atomic_write(path, data)
        self.files.append({"file": path.name, "sha256": hashlib.sha256(data).hexdigest(),
                           "columns": list(columns), "units": units})
        return path

    def table(self, stem, columns, rows, units="dimensionless") -> Path:
        return self.write(stem, table_bytes(columns, rows, self.cfg.format), columns, units)

    def grid(self, stem, grid, units="density") -> Path:
        cols = [f"u{j + 1}" for j in range(len(grid.axes))] + [grid.metadata.get("quantity", "value")]
        return self.write(stem, grid_bytes(grid, self.cfg.format), cols, units)

    def finish(self, notes: str = "") -> list[Path]:
        manifest = {
            "experiment": self.cfg.experiment,
            "version": __version__,
            "config": self.cfg.echo(),
            "stages": self.stages,
            "files": self.files,
            "summary": self.summary,
        }
        if notes:
            manifest["notes"] = notes
        data = (json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n").encode()
        _atomic_write(self.out / "manifest.json", data)
        return [self.out / f["file"] for f in self.files] + [self.out / "manifest.json"]


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def output_dir(cfg: ExperimentConfig) -> Path:
    """``out`` setting, else the environment default, else ``./strongmax-out``; one subdirectory per experiment."""
    if cfg.out:
        return Path(cfg.out)
    base = os.environ.get(OUT_ENV) or "strongmax-out"
    return Path(base) / cfg.experiment


# runners

def run_figure1(cfg: ExperimentConfig, out_dir=None) -> list[Path]:
    """Density grids of ``c_G``, ``c``, ``c^(n)`` and the ratios ``c^(n)/c_G``."""
    base = _copula(cfg)
    cg = ExtremeValueCopula(base.dnorm)
    rec = RunRecorder(cfg, out_dir or output_dir(cfg))
    axes = unit_grid_axes(cfg.grid, cfg.d, cfg.inset)
    rows = []
    with rec.stage("limit and base densities"):
        rec.grid("c_G", density_grid(cg.density, axes, quantity="c_G", family=cfg.family))
        rec.grid("c_base", density_grid(base.density, axes, quantity="c", family=cfg.family))
    dens_n = cfg.n if cfg.all_densities else cfg.n[-1:]
    ratio_max = {}
    for n in cfg.n:
        mc = MaximaCopula(base, n)
        with rec.stage(f"n={n}"):
            if n in dens_n:
                rec.grid(f"c_n{n}", density_grid(mc.density, axes, quantity=f"c_n{n}", n=n))
            ratio = density_ratio_grid(mc.density, cg.density, axes, quantity=f"ratio_n{n}", n=n)
            rec.grid(f"ratio_n{n}", ratio, units="ratio")
        s = ratio.summary()
        centre = ratio.value_at([0.5] * cfg.d)
        ratio_max[str(n)] = {"max": s["max"], "argmax": s["argmax"], "min": s["min"],
                             "at_centre": centre}
        rows.append([n, s["max"], *s["argmax"], s["min"], centre])
    cols = ["n", "ratio_max", *[f"argmax_u{j + 1}" for j in range(cfg.d)], "ratio_min",
            "ratio_at_centre"]
    rec.table("summary", cols, rows, units="ratio; argmax in unit-cube coordinates")
    rec.summary["ratio_grid"] = ratio_max
    return rec.finish("Qualitative reproduction of the density-ratio figure: raw grids only, "
                      "exact values are not read off the published plots.")


def _gpc_law(cfg: ExperimentConfig, dnorm: DNorm, n: int) -> GpcMaximaLaw:
    # in one dimension every copula is the uniform one, a GPC for any u0
    u0 = cfg.u0 if cfg.u0 is not None else (0.5 if cfg.d > 1 else 1e-12)
    return GpcMaximaLaw(dnorm, n, u0)


def run_tv_convergence(cfg: ExperimentConfig, out_dir=None) -> list[Path]:
    """TV brackets between ``n(M^(n) - 1)`` for a GPC and the max-stable limit."""
    _require_density(cfg)
    dnorm = _dnorm(cfg)
    G = StandardMaxStable(dnorm)
    rec = RunRecorder(cfg, out_dir or output_dir(cfg))
    spec = cfg.quadrature()
    with rec.stage("epsilon box"):
        xbox = G.epsilon_box(cfg.eps)
    rec.summary["x_eps_box"] = xbox.to_dict()
    rows = []
    for n in cfg.n:
        law = _gpc_law(cfg, dnorm, n)
        lower = np.maximum(np.asarray(xbox.lower), law.region_lower)
        box = BoxRegion(lower, xbox.upper)
        with rec.stage(f"n={n}"):
            tv = tv_distance_box(law.density, G.density, law.cdf, G.cdf, box, spec)
        rows.append([n, *box.lower, tv.box_integral, tv.tail_bound, tv.refinement_error,
                     tv.lower, tv.upper])
    cols = ["n", *[f"box_lower_x{j + 1}" for j in range(cfg.d)], "box_integral", "tail_bound",
            "refinement_error", "tv_lower", "tv_upper"]
    rec.table("tv_convergence", cols, rows, units="probability; box corners on the x scale")
    return rec.finish()


def run_copula_convergence(cfg: ExperimentConfig, out_dir=None) -> list[Path]:
    """Grid sup cdf gap, TV bracket and ``rho_delta`` between ``C^(n)`` and ``C_G``."""
    base = _copula(cfg)
    cg = ExtremeValueCopula(base.dnorm)
    rec = RunRecorder(cfg, out_dir or output_dir(cfg))
    spec = cfg.quadrature()
    axes = unit_grid_axes(cfg.grid, cfg.d, cfg.inset)
    with rec.stage("boxes"):
        tv_box = unit_cube_epsilon_box(cg.cdf, cfg.d, cfg.eps)
        rho_box = BoxRegion.cube(cfg.inset, 1.0 - cfg.inset, cfg.d, "unit-cube") if cfg.inset > 0 \
            else tv_box
    rec.summary.update(tv_box=tv_box.to_dict(), rho_box=rho_box.to_dict(),
                       rho_threshold=float(np.exp(1.0 / cfg.delta)))
    rows = []
    for n in cfg.n:
        mc = MaximaCopula(base, n)
        with rec.stage(f"n={n}"):
            gap, pt = sup_distance_grid(mc.cdf, cg.cdf, axes)
            tv = tv_distance_box(mc.density, cg.density, mc.cdf, cg.cdf, tv_box, spec)
            rho = rho_delta(mc.density, cg.density, cfg.delta, rho_box, spec)
        rows.append([n, gap, *pt.tolist(), tv.box_integral, tv.tail_bound, tv.refinement_error,
                     tv.lower, tv.upper, rho.value, rho.refinement_error])
    rec.summary["rho_delta_sup"] = max(r[-2] for r in rows)
    cols = ["n", "sup_cdf_gap", *[f"gap_u{j + 1}" for j in range(cfg.d)], "tv_box_integral",
            "tv_tail_bound", "tv_refinement_error", "tv_lower", "tv_upper", "rho_delta",
            "rho_refinement_error"]
    rec.table("copula_convergence", cols, rows, units="probability; rho_delta dimensionless")
    return rec.finish()


def consistency_errors(cfg: ExperimentConfig) -> list[list]:
    """Rows ``(seed, k, n, sup_error, allowance)`` over seeds and the (k, n) schedule."""
    base = _copula(cfg)
    cg = ExtremeValueCopula(base.dnorm)
    sampler = copula_sampler(base)
    axes = unit_grid_axes(cfg.grid, cfg.d, cfg.inset)
    rows = []
    for i in range(cfg.seeds):
        seed = cfg.seed + i
        for j, (k, n) in enumerate(zip(cfg.k, cfg.n)):
            raw, _ = sample_block_maxima(sampler, n, k, RandomSource(seed, j))
            err = empirical_copula_sup_error(EmpiricalCopula(raw.values), cg, axes)
            rows.append([seed, k, n, err.value, err.allowance])
    return rows


def run_consistency(cfg: ExperimentConfig, out_dir=None) -> list[Path]:
    """Empirical copula of block maxima against ``C_G`` over seeds, with per-k medians."""
    rec = RunRecorder(cfg, out_dir or output_dir(cfg))
    with rec.stage("monte carlo"):
        rows = consistency_errors(cfg)
    med = {}
    for k, n in zip(cfg.k, cfg.n):
        vals = [r[3] for r in rows if r[1] == k]
        med[k] = float(np.median(vals))
        rows.append(["median", k, n, med[k], cfg.d / k])
    rec.summary["median_sup_error"] = {str(k): v for k, v in med.items()}
    rec.table("consistency", ["seed", "k", "n", "sup_error", "allowance"], rows,
              units="probability")
    return rec.finish()


def vonmises_points(fam, m: int) -> np.ndarray:
    """Quantiles at levels ``1 - 10^-j``, ``j = 1..m``, which approach the right endpoint."""
    return np.array([float(fam.quantile(1.0 - 10.0 ** -j)) for j in range(1, m + 1)])


def run_vonmises_check(cfg: ExperimentConfig, out_dir=None) -> list[Path]:
    rec = RunRecorder(cfg, out_dir or output_dir(cfg))
    rows = []
    for tag in cfg.margins:
        fam = _margin(tag)
        with rec.stage(tag):
            pts = vonmises_points(fam, cfg.points)
            for x, ratio, target in von_mises_for_family(fam, pts):
                rows.append([tag, fam.gamma, x, ratio, target, abs(ratio - target)])
    rec.summary["max_abs_deviation"] = max(r[-1] for r in rows)
    rec.table("vonmises", ["margin", "gamma", "x", "ratio", "target", "abs_deviation"], rows)
    return rec.finish()


def run_normalized_maxima(cfg: ExperimentConfig, out_dir=None) -> list[Path]:
    """TV brackets between ``q^(n)`` and its GEV-margin max-stable limit."""
    _require_density(cfg)
    G = StandardMaxStable(_dnorm(cfg))
    margins = [_margin(t) for t in cfg.margins]
    rec = RunRecorder(cfg, out_dir or output_dir(cfg))
    spec = cfg.quadrature()
    rows = []
    box = None
    for n in cfg.n:
        law = NormalizedMaximaLaw(G, margins, n)
        lim = law.limit()
        if box is None:
            box = lim.epsilon_box(cfg.eps)
            rec.summary["box"] = box.to_dict()
        with rec.stage(f"n={n}"):
            tv = tv_distance_box(law.density, lim.density, law.cdf, lim.cdf, box, spec)
        rows.append([n, tv.box_integral, tv.tail_bound, tv.refinement_error, tv.lower, tv.upper])
    rec.table("normalized_maxima", ["n", "box_integral", "tail_bound", "refinement_error",
                                    "tv_lower", "tv_upper"], rows, units="probability")
    return rec.finish()


RUNNERS = {
    "figure1": run_figure1,
    "tv-convergence": run_tv_convergence,
    "copula-convergence": run_copula_convergence,
    "consistency": run_consistency,
    "vonmises-check": run_vonmises_check,
    "normalized-maxima": run_normalized_maxima,
}


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> list[Path]:
    return RUNNERS[cfg.experiment](cfg, out_dir)
