"""Command-line entry point: ``spheredyn {run,check,compare} CONFIG``.

Exit codes:
    0  success
    1  I/O error (unreadable config, unwritable output)
    2  config or schema error (message carries the file line)
    3  numerical failure (singular inertia, divergence), with the time reached
    4  a check or comparison exceeded its tolerance
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .checks import run_checks
from .config import Scenario, load_scenario
from .errors import ConfigError, SphereDynError
from .geometry import Rep
from .integrate import diagnostics_report, integrate
from .library import chain_forces, chain_pendulum
from .trajectory_io import write_json, write_table, write_trajectory
from .variational import cross_form_agreement, initial_states

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_GATE = 4

OUTPUT_ENV = "SPHEREDYN_OUTPUT_DIR"


def _output_dir(args) -> Path:
    return Path(args.output_dir or os.environ.get(OUTPUT_ENV) or ".")


def _say(args, *parts):
    if not args.quiet:
        print(*parts)


def _build(scenario: Scenario):
    model = chain_pendulum(scenario.model)
    forces = None if scenario.forces is None else chain_forces(scenario.forces, scenario.model.lengths)
    return model, forces


def _state_payload(state) -> dict:
    return {"t": state.t, "rep": state.rep.value, "q": state.q.tolist(), "v": state.v.tolist()}


def cmd_run(scenario: Scenario, args) -> int:
    model, forces = _build(scenario)
    start = initial_states(model, scenario.initial)[scenario.formulation]
    tic = time.perf_counter()
    traj = integrate(model, start, scenario.integrator, forces, dh_method=scenario.dh_method)
    wall = time.perf_counter() - tic
    report = diagnostics_report(traj)

    out = _output_dir(args)
    csv_path = write_trajectory(out / scenario.trajectory_file, traj)
    summary = {
        "config": scenario.source,
        "formulation": scenario.formulation.value,
        "method": scenario.integrator.method.value,
        "step": scenario.integrator.step,
        "horizon": scenario.integrator.horizon,
        "final_state": _state_payload(traj.final),
        "diagnostics": report.as_dict(),
        "wall_time_s": wall,
    }
    json_path = write_json(out / scenario.summary_file, summary)
    _say(args, f"{len(traj)} samples in {wall:.2f} s; energy drift {report.max_energy_drift:.3e}")
    _say(args, f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_check(scenario: Scenario, args) -> int:
    results = run_checks(scenario, args.seed)
    _say(args, f"{'check':<22} {'value':>12} {'tolerance':>12}  result")
    for r in results:
        _say(args, r.row())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_GATE
    _say(args, "all checks passed")
    return EXIT_OK


def cmd_compare(scenario: Scenario, args) -> int:
    model, forces = _build(scenario)
    agreement = cross_form_agreement(model, forces, scenario.initial, scenario.integrator, scenario.dh_method)
    out = _output_dir(args)
    stem = Path(scenario.trajectory_file).stem
    for rep, traj in agreement.trajectories.items():
        write_trajectory(out / f"{stem}_{rep.value}.csv", traj)
    write_table(out / "divergence.csv", ["t", "divergence"], np.column_stack([agreement.t, agreement.divergence_vs_time]))
    write_json(
        out / f"compare_{Path(scenario.summary_file).name}",
        {
            "config": scenario.source,
            "step": scenario.integrator.step,
            "horizon": scenario.integrator.horizon,
            "max_divergence": agreement.divergence,
            "bound": scenario.compare_bound,
            "energy_drift": {rep.value: diagnostics_report(tr).max_energy_drift for rep, tr in agreement.trajectories.items()},
        },
    )
    ok = agreement.divergence <= scenario.compare_bound
    _say(args, f"max divergence {agreement.divergence:.3e} (bound {scenario.compare_bound:.1e}): {'PASS' if ok else 'FAIL'}")
    if not ok:
        print(f"divergence {agreement.divergence:.3e} exceeds bound {scenario.compare_bound:.1e}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_GATE


COMMANDS = {"run": cmd_run, "check": cmd_check, "compare": cmd_compare}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="scenario YAML file")
    common.add_argument("--output-dir", help=f"where outputs go (default: ${OUTPUT_ENV} or the working directory)")
    common.add_argument("--quiet", action="store_true", help="only report errors")

    parser = argparse.ArgumentParser(prog="spheredyn", description="Simulate chains of spherical links on (S^2)^n.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="integrate one formulation and write CSV + JSON")
    check = sub.add_parser("check", parents=[common], help="run the invariant suite on the configured model")
    check.add_argument("--seed", type=int, default=None, help="seed for the random samples (overrides check.seed)")
    sub.add_parser("compare", parents=[common], help="integrate all four formulations and compare")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return COMMANDS[args.command](scenario, args)
    except SphereDynError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
