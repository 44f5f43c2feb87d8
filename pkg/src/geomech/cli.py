"""Command-line batch runner.

    geomech run <scenario.json> [--out-dir DIR] [--dt X] [--t-final X] [--aero on|off]
    geomech validate <scenario.json>
    geomech compare <scenario.json> [--out-dir DIR] [--dt X] [--t-final X]

Flags override the corresponding scenario fields.  Exit codes: 0 on
success, 2 on parse/validation errors, 3 on solver failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .errors import (
    AntipodalError,
    DegenerateMeanError,
    GeomechError,
    NoConvergenceError,
    ScenarioParseError,
    ScenarioValidationError,
)
from .runner import run, write_outputs
from .scenario import parse_scenario

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geomech",
        description="Rigid-body simulation and tracking-control scenario runner.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("scenario", type=Path, help="scenario JSON file")

    def add_run_flags(p):
        p.add_argument("--out-dir", type=Path, default=Path("."), help="output directory")
        p.add_argument("--dt", type=float, default=None, help="override time step (s)")
        p.add_argument("--t-final", type=float, default=None, help="override duration (s)")

    p_run = sub.add_parser("run", help="run a scenario and write CSV + metrics")
    add_common(p_run)
    add_run_flags(p_run)
    p_run.add_argument(
        "--aero", choices=("on", "off"), default=None, help="override the aero flag"
    )

    p_val = sub.add_parser("validate", help="parse and validate a scenario file")
    add_common(p_val)

    p_cmp = sub.add_parser(
        "compare", help="run the variational and RK4 integrators side by side"
    )
    add_common(p_cmp)
    add_run_flags(p_cmp)
    return parser


def _load_scenario(path: Path):
    try:
        text = path.read_bytes()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return None, EXIT_INVALID
    try:
        return parse_scenario(text), EXIT_OK
    except ScenarioParseError as exc:
        print(f"parse error in {path}: {exc}", file=sys.stderr)
        return None, EXIT_INVALID
    except ScenarioValidationError as exc:
        print(f"invalid scenario {path}:", file=sys.stderr)
        for field, msg in exc.violations:
            print(f"  - {field}: {msg}", file=sys.stderr)
        return None, EXIT_INVALID


def _apply_overrides(scenario, args):
    updates = {}
    if getattr(args, "dt", None) is not None:
        if not args.dt > 0.0:
            print("error: --dt must be > 0", file=sys.stderr)
            return None
        updates["dt"] = args.dt
    if getattr(args, "t_final", None) is not None:
        if args.t_final < 0.0:
            print("error: --t-final must be >= 0", file=sys.stderr)
            return None
        updates["t_final"] = args.t_final
    aero = getattr(args, "aero", None)
    if aero is not None:
        updates["aero"] = dataclasses.replace(scenario.aero, enabled=(aero == "on"))
    return dataclasses.replace(scenario, **updates) if updates else scenario


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    scenario, status = _load_scenario(args.scenario)
    if scenario is None:
        return status

    if args.command == "validate":
        print(f"{args.scenario}: OK ({scenario.kind}, dt={scenario.dt}, "
              f"t_final={scenario.t_final})")
        return EXIT_OK

    scenario = _apply_overrides(scenario, args)
    if scenario is None:
        return EXIT_INVALID
    if args.command == "compare":
        scenario = dataclasses.replace(scenario, kind="integrator_compare")

    try:
        series, metrics = run(scenario)
    except (NoConvergenceError, DegenerateMeanError, AntipodalError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except GeomechError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    out_dir = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.scenario.stem
    suffix = "_compare" if args.command == "compare" else ""
    csv_path = out_dir / (scenario.csv_name or f"{stem}{suffix}.csv")
    metrics_path = out_dir / (scenario.metrics_name or f"{stem}{suffix}.metrics.json")
    try:
        write_outputs(series, metrics, csv_path, metrics_path)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"wrote {csv_path} ({len(series)} rows) and {metrics_path}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
