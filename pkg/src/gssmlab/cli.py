"""Command-line entry point for simulation, estimator runs, and benchmarks.

Exit codes: 0 on success, 1 on usage or configuration errors, 2 on numerical
failures inside an estimator.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .bench import compare, monte_carlo, run_single, simulate_pair
from .gssm import dimension_report
from .models import EstimationError
from .radar import ESTIMATOR_NAMES, ScenarioConfig

USAGE_EXIT = 1
NUMERICAL_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="scenario JSON file; flags override its values")
    p.add_argument("--seed", type=int, help="base RNG seed")
    p.add_argument("--steps", type=int, help="number of measurement steps N")
    p.add_argument("--w", type=int, help="window length")
    p.add_argument("--truth-mode", choices=("sampled", "exact"), help="truth initialization mode")
    p.add_argument("--zero-noise", action="store_true",
                   help="generate truth and measurements without noise (estimator settings unchanged)")
    p.add_argument("--out-dir", type=Path, default=Path("."), help="directory for output files")


def build_parser() -> _Parser:
    parser = _Parser(prog="gssm-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a truth+measurement CSV")
    _add_scenario_flags(p)

    p = sub.add_parser("run", help="run one estimator, write its estimate CSV")
    _add_scenario_flags(p)
    p.add_argument("--estimator", choices=ESTIMATOR_NAMES, required=True)

    p = sub.add_parser("compare", help="run the configured estimators on shared data")
    _add_scenario_flags(p)
    p.add_argument("--trailing", type=float, default=1.0,
                   help="trailing fraction of steps for the RMSE summary")

    p = sub.add_parser("monte-carlo", help="aggregate RMSE over consecutive seeds")
    _add_scenario_flags(p)
    p.add_argument("--runs", type=int, help="number of seeded runs")
    p.add_argument("--trailing", type=float, default=1.0)
    p.add_argument("--threads", type=int, help="worker cap (default: GSSM_LAB_THREADS or CPU count)")

    p = sub.add_parser("dims", help="print the stacked-system dimension report")
    p.add_argument("--nb", type=int, required=True, help="constant-block dimension")
    p.add_argument("--nc", type=int, required=True, help="dynamic-block dimension")
    p.add_argument("--m", type=int, required=True, help="measurement dimension")
    p.add_argument("--w", type=int, required=True, help="window length")
    return parser


def _load_config(args) -> ScenarioConfig:
    data = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
    cfg = ScenarioConfig.from_dict(data)
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "steps", None) is not None:
        updates["N"] = args.steps
    if getattr(args, "w", None) is not None:
        updates["w"] = args.w
    if getattr(args, "truth_mode", None) is not None:
        updates["truth_mode"] = args.truth_mode
    if getattr(args, "runs", None) is not None:
        updates["runs"] = args.runs
    if getattr(args, "estimator", None) is not None and args.command == "run":
        updates["estimators"] = (args.estimator,)
    if updates:
        merged = cfg.to_dict()
        for key, value in updates.items():
            if key == "N":
                merged["N"] = value
            elif key == "estimators":
                merged["estimators"] = list(value)
            else:
                merged[key] = value
        cfg = ScenarioConfig.from_dict(merged)
    return cfg


def _write_truth_csv(path: Path, truth, meas) -> None:
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "t", "truth_x", "truth_v", "truth_h", "rho"])
        for k in range(len(truth)):
            writer.writerow([
                k + 1, repr(float(truth.t[k])),
                repr(float(truth.x[k])), repr(float(truth.v[k])), repr(float(truth.h[k])),
                repr(float(meas.rho[k])),
            ])


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    truth, meas = simulate_pair(cfg, zero_noise=args.zero_noise)
    out = args.out_dir / "truth.csv"
    _write_truth_csv(out, truth, meas)
    print(f"wrote {out} ({len(truth)} steps)")
    return 0


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    table = run_single(cfg, args.estimator, zero_noise=args.zero_noise)
    out = args.out_dir / f"{args.estimator}.csv"
    table.to_csv(out)
    print(f"wrote {out} ({len(table)} steps)")
    return 0


def _cmd_compare(args) -> int:
    cfg = _load_config(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    tables, summaries = compare(cfg, zero_noise=args.zero_noise, trailing=args.trailing)
    for tag, table in tables.items():
        table.to_csv(args.out_dir / f"{tag}.csv")
    payload = {
        "seed": cfg.seed,
        "trailing_fraction": args.trailing,
        "estimators": {tag: s.rmse for tag, s in summaries.items()},
    }
    out = args.out_dir / "rmse.json"
    with open(out, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    for tag, s in summaries.items():
        rmse = "  ".join(f"{k}={v:.6g}" for k, v in s.rmse.items())
        print(f"{tag:<6} rmse: {rmse}")
    print(f"wrote {out}")
    return 0


def _cmd_monte_carlo(args) -> int:
    cfg = _load_config(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    summary = monte_carlo(cfg, runs=args.runs, trailing=args.trailing, threads=args.threads)
    out = args.out_dir / "monte_carlo.json"
    summary.to_json(out)
    for tag in summary.per_run:
        mean = "  ".join(f"{k}={v:.6g}" for k, v in summary.mean(tag).items())
        print(f"{tag:<6} mean rmse over {summary.runs} runs: {mean}")
    print(f"wrote {out}")
    return 0


def _cmd_dims(args) -> int:
    print(dimension_report(args.nb, args.nc, args.m, args.w).format())
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "run": _cmd_run,
    "compare": _cmd_compare,
    "monte-carlo": _cmd_monte_carlo,
    "dims": _cmd_dims,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except EstimationError as exc:
        print(f"gssm-lab: numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_EXIT
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"gssm-lab: error: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
