"""Command-line interface: run experiments, check invariants, sweep budgets.

Exit codes: 0 success, 2 configuration error, 3 invariant violation during
``check``.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .harness import (
    CASES,
    ConfigError,
    ExperimentConfig,
    parse_config,
    run_experiment,
)
from .sched import TaskSpec, simulate_edf, utilization

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anyflow",
        description="Anytime-MPC co-simulation: compare compute models by tracking cost.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the experiment and write CSVs and figures")
    run_p.add_argument("--config", required=True, help="path to the flat key-value config file")
    run_p.add_argument("--case", choices=list(CASES) + ["all"], default=None,
                       help="override the configured case")
    run_p.add_argument("--seed", type=int, default=None, help="override the configured seed")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    check_p = sub.add_parser("check", help="validate a config and run the invariant suite")
    check_p.add_argument("--config", required=True)

    sweep_p = sub.add_parser("sweep", help="final ISE versus compute-budget scale")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--budget-scale", required=True,
                         help="comma-separated positive scale factors, e.g. 0.25,1,4")
    sweep_p.add_argument("--seed", type=int, default=None)
    sweep_p.add_argument("--out", required=True)
    sweep_p.add_argument("--no-figures", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    raise AssertionError("unreachable")


def entry() -> None:
    sys.exit(main())


def _load(args) -> ExperimentConfig:
    config = parse_config(args.config)
    if getattr(args, "case", None):
        config = replace(config, case=args.case)
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    config.validate()
    return config


def _cmd_run(args) -> int:
    config = _load(args)
    out = Path(args.out)
    result = run_experiment(config, out_dir=out)
    for row in result.summary:
        print(f"{row['case']:>12s}  task {row['task_id']}: "
              f"final ISE {row['final_ise']:.6g}  degradation {row['degradation_pct']:+.2f}%")
    if not args.no_figures:
        from . import report

        save_ise = report.save_ise_figure(result, out / "ise.png")
        save_tracking = report.save_tracking_figure(result, out / "tracking.png")
        print(f"wrote {save_ise} and {save_tracking}")
    print(f"wrote {out / 'samples.csv'} and {out / 'summary.csv'}")
    return EXIT_OK


def _cmd_check(args) -> int:
    config = _load(args)
    failures = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        status = "ok" if ok else "FAIL"
        line = f"  [{status}] {name}"
        if detail and not ok:
            line += f" ({detail})"
        print(line)
        if not ok:
            failures.append(name)

    fast = [TaskSpec(k + 1, config.period_fast, config.wcet, config.iter_cost, anytime=True)
            for k in range(2)]
    slow = [TaskSpec(k + 1, config.period_slow, config.wcet, config.iter_cost)
            for k in range(2)]
    u_fast, u_slow = utilization(fast), utilization(slow)
    check("fast-period task set exceeds unit utilization (motivates anytime mode)",
          u_fast > 1.0, f"utilization={u_fast:.3f}")
    check("slow-period task set is schedulable", u_slow <= 1.0, f"utilization={u_slow:.3f}")

    jobs_a = simulate_edf(fast, horizon=min(config.sim_length, 1.0),
                          jitter=config.jitter, seed=config.seed)
    jobs_b = simulate_edf(fast, horizon=min(config.sim_length, 1.0),
                          jitter=config.jitter, seed=config.seed)
    check("EDF timeline is deterministic under a fixed seed", jobs_a == jobs_b)
    total = sum(j.allotted for j in jobs_a)
    span = min(config.sim_length, 1.0)
    check("EDF never allocates more processor time than exists",
          total <= span + 1e-9, f"allocated {total:.6f}s over {span:.3f}s")

    short = replace(config, sim_length=min(config.sim_length, 0.5), case="all")
    result = run_experiment(short)
    for (case, tid), trace in result.traces.items():
        diffs = np.diff(trace.ise)
        check(f"ISE non-decreasing for {case} task {tid}", bool(np.all(diffs >= -1e-12)))
    for tid in (1, 2):
        trace = result.traces[("anytime-20ms", tid)]
        inside = bool(np.all(trace.u > config.u_min) and np.all(trace.u < config.u_max))
        check(f"anytime inputs strictly inside bounds, task {tid}", inside)

    if failures:
        print(f"{len(failures)} invariant violation(s)")
        return EXIT_INVARIANT
    print("all invariants hold")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _load(args)
    try:
        scales = [float(s) for s in args.budget_scale.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --budget-scale list: {args.budget_scale!r}") from exc
    if not scales or any(s <= 0.0 for s in scales):
        raise ConfigError("--budget-scale needs positive factors")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    finals = {1: [], 2: []}
    for scale in scales:
        scaled = replace(config, iter_cost=config.iter_cost / scale, case="anytime-20ms")
        result = run_experiment(scaled)
        for tid in (1, 2):
            finals[tid].append(result.traces[("anytime-20ms", tid)].final_ise)
        print(f"scale {scale:g}: task1 ISE {finals[1][-1]:.6g}, task2 ISE {finals[2][-1]:.6g}")

    with (out / "sweep.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["budget_scale", "task_id", "final_ise"])
        for i, scale in enumerate(scales):
            for tid in (1, 2):
                writer.writerow([repr(scale), tid, repr(finals[tid][i])])
    if not args.no_figures:
        from . import report

        report.save_sweep_figure(scales, finals, out / "sweep.png")
        print(f"wrote {out / 'sweep.png'}")
    print(f"wrote {out / 'sweep.csv'}")
    return EXIT_OK
