"""Command-line entry point: ``run``, ``bounds`` and ``catalog``.

Exit codes: 0 success, 2 configuration error, 3 integrator convergence failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bounds import bound_report
from .evolution import ConvergenceError
from .experiments import CATALOG, ConfigError, parse_config, resolve_config, run_experiment
from .model import HolsteinParams

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors raise instead of exiting."""

    def error(self, message):
        raise ConfigError(message)


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="holstein-sim", description="Trotterised Holstein model on trapped ions")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a catalog experiment")
    run.add_argument("experiment")
    run.add_argument("--config", type=Path, help="TOML file of dotted keys")
    run.add_argument("--out", help="output directory (default: results)")
    run.add_argument("--cutoff", type=int, help="Fock cutoff M per mode")
    run.add_argument("--steps", type=int, help="number of symmetric Trotter steps r")
    run.add_argument("--pulse-level", type=_on_off, help="on|off")
    run.add_argument("--dt", type=float, help="RK4 step in units of 1/nu_1")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for independent runs")

    b = sub.add_parser("bounds", help="norm and gate-count bounds")
    b.add_argument("--N", type=int, required=True)
    b.add_argument("--M", type=int, required=True)
    b.add_argument("--h", type=float, required=True)
    b.add_argument("--g", type=float, required=True)
    b.add_argument("--omega0", type=float, required=True)
    b.add_argument("--t", type=float, required=True)
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--k", type=int, default=1)

    sub.add_parser("catalog", help="list experiments")
    return parser


def _cmd_run(args) -> int:
    overrides = {}
    for key, value in (("output.dir", args.out), ("model.cutoff", args.cutoff),
                       ("trotter.steps", args.steps), ("ion.pulse_level", args.pulse_level),
                       ("integrator.dt", args.dt)):
        if value is not None:
            overrides[key] = value
    if args.jobs < 1:
        raise ConfigError("must be >= 1", "--jobs")
    if args.config is not None:
        cfg = parse_config(args.config, args.experiment, overrides)
    else:
        cfg = resolve_config(args.experiment, {}, overrides)
    csv_path, manifest = run_experiment(cfg, jobs=args.jobs)
    print(csv_path)
    print(manifest)
    return EXIT_OK


def _cmd_bounds(args) -> int:
    try:
        p = HolsteinParams(h=args.h, g=args.g, omega0=args.omega0, n_sites=args.N, cutoff=args.M)
        report = bound_report(p, args.t, args.eps, args.k)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for key, value in report.as_dict().items():
        print(f"{key} = {value}")
    return EXIT_OK


def _cmd_catalog(args) -> int:
    width = max(map(len, CATALOG))
    for entry in CATALOG.values():
        print(f"{entry.id:<{width}}  {entry.figure:<26}  {entry.description}")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return {"run": _cmd_run, "bounds": _cmd_bounds, "catalog": _cmd_catalog}[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
