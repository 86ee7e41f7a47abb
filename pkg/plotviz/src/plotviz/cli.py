"""Command-line front end: plot --csv ekf.csv --csv gssm.csv --state v --out fig9.png"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import PlotSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plot", description=__doc__)
    parser.add_argument("--csv", action="append", required=True, type=Path,
                        help="estimate CSV (repeat for several estimators)")
    parser.add_argument("--state", choices=("x", "v", "h"), default="v",
                        help="which state to plot")
    parser.add_argument("--out", required=True, type=Path, help="output image path")
    parser.add_argument("--step-range", metavar="LO:HI",
                        help="restrict to steps LO..HI inclusive")
    parser.add_argument("--title", help="figure title override")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    step_range = None
    if args.step_range:
        try:
            lo, hi = args.step_range.split(":")
            step_range = (int(lo), int(hi))
        except ValueError:
            print(f"plot: error: bad --step-range {args.step_range!r}, expected LO:HI", file=sys.stderr)
            return 1
    try:
        spec = PlotSpec(csv_paths=args.csv, out_path=args.out, state=args.state,
                        step_range=step_range, title=args.title)
        written = render(spec)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"plot: error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
