"""Command line entry point: ``strongmax <experiment> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 unsupported family.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, DomainError, NumericalError, UnsupportedFamilyError
from .experiments import EXPERIMENTS, OUT_ENV, build_config, load_config_file, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_UNSUPPORTED = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strongmax",
        description="Reproducible convergence experiments for multivariate maxima.",
        epilog=f"Default output directory: ${OUT_ENV}/<experiment>, else ./strongmax-out/<experiment>.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", metavar="PATH", help="flat key = value settings file")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--seed", type=int, help="base random seed")
        p.add_argument("--format", choices=("csv", "json"), help="table format")
        p.add_argument("--grid", type=int, metavar="N", help="grid points per axis")
        p.add_argument("--quad", type=int, metavar="N", help="Gauss-Legendre points per panel")
        p.add_argument("--delta", type=float, metavar="D", help="rho_delta exponent in (0, 1]")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key (repeatable)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_values = load_config_file(args.config) if args.config else {}
        overrides = {}
        for item in args.set:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            overrides[key.strip()] = value.strip()
        for key in ("out", "seed", "format", "grid", "quad", "delta"):
            value = getattr(args, key)
            if value is not None:
                overrides[key] = value
        cfg = build_config(args.experiment, file_values, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        files = run_experiment(cfg)
    except UnsupportedFamilyError as exc:
        print(f"unsupported family: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (NumericalError, DomainError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
