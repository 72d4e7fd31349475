"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 numerical fault, 3 I/O error.
"""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError
from .harness import (list_grids, list_scenarios, load_grid,
                      load_scenario_mapping, run_prc, run_scenario, run_sweep,
                      scenario_from_mapping, write_outputs, write_prc_outputs)
from .numerics import SimulationFault

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neuropend",
        description="Event-based neuromorphic control of a damped pendulum")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario and write CSV outputs")
    p.add_argument("--scenario", required=True,
                   help="shipped scenario name or path to a config file")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("sweep", help="run a grid of scenario variants")
    p.add_argument("--scenario", required=True,
                   help="scenario template (name or path)")
    p.add_argument("--grid", required=True, help="grid file (name or path)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("prc", help="sample the phase response curve")
    p.add_argument("--P", type=float, default=0.3, help="pulse magnitude")
    p.add_argument("--w", type=float, default=0.05, help="pulse duration")
    p.add_argument("--phases", type=int, default=16, help="sample count")
    p.add_argument("--out", required=True, help="output directory")

    sub.add_parser("list-scenarios", help="list shipped scenarios and grids")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            sc = scenario_from_mapping(load_scenario_mapping(args.scenario))
            result = run_scenario(sc)
            write_outputs(result, args.out)
        elif args.command == "sweep":
            base = load_scenario_mapping(args.scenario)
            grid = load_grid(args.grid)
            run_sweep(base, grid, jobs=args.jobs, out_dir=args.out)
        elif args.command == "prc":
            prc = run_prc(args.P, args.w, args.phases)
            write_prc_outputs(prc, args.out)
        elif args.command == "list-scenarios":
            for name in list_scenarios():
                print(name)
            for name in list_grids():
                print(name + " (grid)")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationFault as exc:
        print(f"numerical fault: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
