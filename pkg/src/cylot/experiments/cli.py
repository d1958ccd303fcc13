"""Command line entry point.

Exit codes: 0 success, 2 infeasible, 1 error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..solver import INFEASIBLE
from .config import load_config
from .pipeline import (run_convergence, run_oracle_comparison, run_smoothing,
                       run_solve, run_wiener_demo)
from .reports import emit_report, render

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2

_COMMANDS = {
    "converge": "projected costs C_k over the configured ranks",
    "oracle": "empirical quadratic cost against the Gaussian closed form",
    "wiener": "Cameron-Martin cost with tail classes",
    "smooth": "smooth compactly supported feasible potentials on a grid",
    "solve": "one-shot transport between two measures",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cylot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", help="output path (default: config output.path, else stdout)")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
    return parser


def _infeasible(command: str, report) -> bool:
    if command in ("converge", "wiener"):
        return report.full_status == INFEASIBLE
    if command in ("oracle", "solve"):
        return report.status == INFEASIBLE
    return False


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        extra = None
        if args.command == "converge":
            report = run_convergence(cfg)
        elif args.command == "wiener":
            report = run_wiener_demo(cfg)
        elif args.command == "oracle":
            report = run_oracle_comparison(cfg)
        elif args.command == "smooth":
            report, extra = run_smoothing(cfg)
        else:
            report = run_solve(cfg)

        fmt = args.format or cfg.output_format
        out = args.out or cfg.output_path
        if out:
            emit_report(report, out, fmt)
        else:
            sys.stdout.write(render(report, fmt))
        grid_out = cfg.smoothing.get("grid_out")
        if extra is not None and grid_out:
            base = Path(grid_out)
            extra.phi.to_csv(base.with_name(base.name + "_phi.csv"))
            extra.psi.to_csv(base.with_name(base.name + "_psi.csv"))
    except (ValueError, OSError, KeyError, TypeError) as err:
        print(f"cylot {args.command}: error: {err}", file=sys.stderr)
        return EXIT_ERROR
    if _infeasible(args.command, report):
        print(f"cylot {args.command}: infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
