"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 non-physical simulation,
4 optimization aborted.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .harness import (
    ALGORITHMS,
    NonPhysicalRun,
    OptimizationAborted,
    cmd_calibrate,
    cmd_compare,
    cmd_optimize,
    cmd_simulate,
    cmd_sweep,
)
from .hpto import DESIGN_NAMES, DesignVector

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NON_PHYSICAL = 3
EXIT_ABORTED = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", default=None, help="run configuration JSON")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", metavar="DIR", default=None, help="override the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hptopt",
        description="Heaving two-body WEC with hydraulic PTO: simulation, "
        "feasibility calibration, and design optimization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one design and write time series + metrics")
    _add_common(p)
    p.add_argument(
        "--design",
        metavar="AP,VH0,VL0,PL0",
        default=None,
        help="piston area [m^2], HPA volume [m^3], LPA volume [m^3], "
        "LPA pre-charge [Pa]; defaults to the config's default_design",
    )

    p = sub.add_parser("sweep", help="grid-sweep two design variables")
    _add_common(p)
    p.add_argument("--pair", metavar="VAR1,VAR2", default="all",
                   help="two of ap,vh0,vl0,pl0, or 'all' for the 6 pairs")
    p.add_argument("--grid", type=int, default=6, metavar="N", help="grid points per side")

    p = sub.add_parser("calibrate", help="rebuild the feasible region from simulations")
    _add_common(p)

    p = sub.add_parser("optimize", help="run one optimization algorithm")
    _add_common(p)
    p.add_argument("--algorithm", metavar="NAME", default=None,
                   help=f"one of {', '.join(ALGORITHMS)}")
    p.add_argument("--budget", type=int, default=None, help="evaluation budget")
    p.add_argument("--convergence-step", type=int, default=10,
                   help="downsampling step of the convergence file")

    p = sub.add_parser("compare", help="tabulate and align several optimization traces")
    _add_common(p)
    p.add_argument("traces", nargs="+", metavar="TRACE_CSV")
    p.add_argument("--horizon", type=int, default=None,
                   help="alignment length; default is the longest trace")

    return parser


def _parse_design(text: str) -> DesignVector:
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError(f"--design needs 4 comma-separated values ({','.join(DESIGN_NAMES)})")
    try:
        return DesignVector(*(float(v) for v in parts))
    except ValueError as exc:
        raise ConfigError(f"bad --design: {exc}") from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, out_dir=args.out)
        if args.command == "simulate":
            design = _parse_design(args.design) if args.design else None
            m = cmd_simulate(cfg, design)
            print(f"mean electrical power: {m.mean_elec / 1e3:.2f} kW (rpf {m.rpf:.2f})")
        elif args.command == "sweep":
            paths = cmd_sweep(cfg, args.pair, args.grid)
            print(f"wrote {len(paths)} sweep files to {cfg.output_dir}")
        elif args.command == "calibrate":
            cmd_calibrate(cfg)
        elif args.command == "optimize":
            summary = cmd_optimize(
                cfg, args.algorithm, args.budget, convergence_step=args.convergence_step
            )
            print(
                f"{summary['algorithm']}: best mean electrical power "
                f"{summary['mean_elec_W'] / 1e3:.2f} kW after {summary['iterations']} evaluations"
            )
        elif args.command == "compare":
            report = cmd_compare(cfg, args.traces, horizon=args.horizon)
            print(f"compared {len(report['rows'])} runs (horizon {report['horizon']})")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonPhysicalRun as exc:
        print(f"simulation: {exc}", file=sys.stderr)
        return EXIT_NON_PHYSICAL
    except OptimizationAborted as exc:
        print(f"optimization aborted: {exc}", file=sys.stderr)
        return EXIT_ABORTED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
