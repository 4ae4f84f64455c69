"""Command line front end.

Four subcommands: calibrate performance models from measurement CSVs,
size a burst for a projected overrun, simulate a scenario to a trace
file, and derive plot-ready series from a trace.

Exit codes form a total map so shell harnesses can branch without
parsing output:

* 0: success (and, for simulate, deadline met)
* 2: unreadable or malformed input (CSV, scenario, trace, arguments)
* 3: input parsed but the data is unusable (too few samples, bad model)
* 4: the request is infeasible (plan exceeds domain or cloud pool)
* 5: the simulation ran to completion but missed the deadline
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

from .errors import (
    CheckpointError,
    CsvFormatError,
    InfeasiblePlanError,
    InsufficientDataError,
    ModelFormatError,
    ScenarioError,
    StallError,
)
from .perfmodel import (
    eval_log_law,
    fit_log_law,
    fit_split_model,
    read_calibration_csv,
    save_model,
)
from .presets import SCENARIO_PRESETS, load_preset_scenario
from .scenario import Scenario, load_scenario
from . import burst, sim

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4
EXIT_DEADLINE_MISSED = 5

log = logging.getLogger("burstline")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="burstline",
        description="Deadline-aware cloud bursting planner and simulator.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase log verbosity (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="fit a performance model from a CSV")
    cal.add_argument("--kind", choices=("loglaw", "split"), required=True)
    cal.add_argument("--in", dest="input", required=True, metavar="CSV")
    cal.add_argument("--out", dest="output", required=True, metavar="MODEL")
    cal.add_argument("--label", default=None,
                     help="model label for loglaw fits (default: cluster)")

    plan = sub.add_parser("plan", help="size a burst for a projected overrun")
    source = plan.add_mutually_exclusive_group(required=True)
    source.add_argument("--scenario", metavar="FILE")
    source.add_argument("--preset", choices=sorted(SCENARIO_PRESETS))
    amount = plan.add_mutually_exclusive_group(required=True)
    amount.add_argument("--surplus", type=float, metavar="SECONDS",
                        help="projected overrun past the deadline")
    amount.add_argument("--estimate", type=float, metavar="SECONDS",
                        help="projected total runtime; surplus is taken "
                             "against the scenario deadline")

    simulate = sub.add_parser("simulate", help="run a scenario and write its trace")
    source = simulate.add_mutually_exclusive_group(required=True)
    source.add_argument("--scenario", metavar="FILE")
    source.add_argument("--preset", choices=sorted(SCENARIO_PRESETS))
    simulate.add_argument("--trace", required=True, metavar="CSV")
    simulate.add_argument("--seed", type=int, default=None,
                          help="override the scenario's payload seed")

    report = sub.add_parser("report", help="derive plot-ready series from a trace")
    report.add_argument("--trace", required=True, metavar="CSV")
    report.add_argument("--out-dir", required=True, metavar="DIR")
    return parser


def _load_scenario_arg(args) -> Scenario:
    if args.preset:
        return load_preset_scenario(args.preset)
    return load_scenario(args.scenario)


def cmd_calibrate(args) -> int:
    samples = read_calibration_csv(args.input, kind=args.kind)
    if args.kind == "loglaw":
        model = fit_log_law(samples, label=args.label or "cluster")
        residuals = [
            (eval_log_law(model, s.size) - math.log10(s.elapsed_seconds)) ** 2
            for s in samples
        ]
    else:
        model = fit_split_model(samples)
        residuals = [
            (model.slope * s.size + model.intercept - s.elapsed_seconds) ** 2
            for s in samples
        ]
    save_model(model, args.output)
    print(f"samples={len(samples)}")
    print(f"slope={model.slope!r}")
    print(f"intercept={model.intercept!r}")
    print(f"rss={sum(residuals)!r}")
    print(f"written={args.output}")
    return EXIT_OK


def cmd_plan(args) -> int:
    scenario = _load_scenario_arg(args)
    if args.surplus is not None:
        surplus = args.surplus
    else:
        surplus = args.estimate - scenario.deadline_seconds
    if surplus <= 0.0:
        print("gamma=0")
        print("cloud_cores=0")
        print("no burst needed")
        return EXIT_OK
    plan = burst.plan_burst(
        surplus,
        scenario,
        scenario.cluster.available_cores,
        scenario.deadline_seconds,
    )
    print(f"c_required={plan.c_required}")
    print(f"correction_factor={plan.correction!r}")
    print(f"cloud_cores={plan.cloud_core_target}")
    print(f"gamma={plan.gamma}")
    print(f"checkpoint_seconds={plan.checkpoint_seconds!r}")
    print(f"provisioning_seconds={plan.provisioning_seconds!r}")
    print(f"transfer_seconds={plan.transfer_seconds!r}")
    print("feasible=true")
    if plan.is_noop:
        print("no burst needed")
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = _load_scenario_arg(args)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    result = sim.run(scenario)
    sim.write_trace_csv(result, args.trace)
    first_burst = result.burst_steps[0] if result.burst_steps else "none"
    print(
        f"deadline_met={result.deadline_met} "
        f"finished_at={result.completion_seconds!r} "
        f"burst_step={first_burst}"
    )
    return EXIT_OK if result.deadline_met else EXIT_DEADLINE_MISSED


def cmd_report(args) -> int:
    rows = sim.read_trace_csv(args.trace)
    sim.write_report_csvs(rows, args.out_dir)
    print(f"written={args.out_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {
        "calibrate": cmd_calibrate,
        "plan": cmd_plan,
        "simulate": cmd_simulate,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except InfeasiblePlanError as exc:
        print(f"infeasible: {exc} (constraint={exc.constraint})", file=sys.stderr)
        return EXIT_INFEASIBLE
    except StallError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InsufficientDataError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (CsvFormatError, ScenarioError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
