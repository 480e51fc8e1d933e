"""Closed-loop co-simulation of the three experiment cases, with CSV output.

Two periodic MPC tasks control two DC motors on one simulated processor:

* ``ideal-20ms``   -- reference solver every 20 ms, unbounded compute
                      (unimplementable baseline);
* ``slow-300ms``   -- reference solver every 300 ms, the period that makes
                      the task set schedulable;
* ``anytime-20ms`` -- the anytime flow every 20 ms, with per-window iteration
                      budgets taken from the EDF simulation; the computed
                      input is committed at the next window boundary.

Plants evolve at a fixed micro-step under zero-order-hold inputs, so plant
integration accuracy is identical across cases.  Control performance is the
integral square error of the tracked output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .barrier import BarrierParams
from .flow import FlowParams
from .mpc import MpcConfig, MpcTaskState, build_condensed_qp, mpc_invoke
from .oracle import solve_reference
from .plant import DiscretePlant, LinearPlant, dc_motor, discretize, simulate_step
from .sched import JobBudget, TaskSpec, simulate_edf, write_jobs_csv

Array = np.ndarray

CASES = ("ideal-20ms", "slow-300ms", "anytime-20ms")

SAMPLES_HEADER = "t,task_id,case,u,y,ref,e,ise"
SUMMARY_HEADER = "case,task_id,final_ise,degradation_pct"


class ConfigError(Exception):
    """Malformed experiment configuration (bad file, key, or value)."""


@dataclass
class ExperimentConfig:
    """Flat experiment settings; every field maps to one config-file key."""

    case: str = "all"
    sim_length: float = 5.0
    micro_step: float = 1e-3
    seed: int = 0
    jitter: float = 0.2
    sigma: float = 10.0
    beta: float = 1e5
    step_size: float = 1e-3
    period_fast: float = 0.02
    period_slow: float = 0.3
    wcet: float = 0.15
    iter_cost: float = 1e-5
    horizon: int = 10
    output_weight: float = 1.0
    input_weight: float = 0.01
    u_min: float = -10.0
    u_max: float = 10.0
    ref1_amplitude: float = 0.5
    ref2_amplitude: float = 0.25
    motor1_J: float = 0.01
    motor1_b: float = 0.1
    motor1_K: float = 0.01
    motor1_R: float = 1.0
    motor1_L: float = 0.5
    motor2_J: float = 0.01
    motor2_b: float = 0.1
    motor2_K: float = 0.01
    motor2_R: float = 2.0
    motor2_L: float = 0.8

    def validate(self) -> None:
        if self.case not in CASES and self.case != "all":
            raise ConfigError(f"case must be one of {', '.join(CASES)} or 'all', got {self.case!r}")
        for key in ("sim_length", "micro_step", "sigma", "beta", "step_size",
                    "period_fast", "period_slow", "iter_cost"):
            if getattr(self, key) <= 0.0:
                raise ConfigError(f"{key} must be positive")
        if self.jitter < 0.0 or self.wcet < 0.0:
            raise ConfigError("jitter and wcet must be nonnegative")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if self.u_min >= self.u_max:
            raise ConfigError("u_min must be strictly below u_max")
        for key in ("period_fast", "period_slow"):
            ratio = getattr(self, key) / self.micro_step
            if abs(ratio - round(ratio)) > 1e-9:
                raise ConfigError(f"{key} must be an integer multiple of micro_step")
        ratio = self.sim_length / self.micro_step
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError("sim_length must be an integer multiple of micro_step")

    def motors(self) -> Tuple[LinearPlant, LinearPlant]:
        m1 = dc_motor(J=self.motor1_J, b=self.motor1_b, K=self.motor1_K,
                      R=self.motor1_R, L=self.motor1_L)
        m2 = dc_motor(J=self.motor2_J, b=self.motor2_b, K=self.motor2_K,
                      R=self.motor2_R, L=self.motor2_L)
        return m1, m2

    def flow_params(self) -> FlowParams:
        return FlowParams(gain=self.sigma, step_size=self.step_size)

    def barrier_params(self) -> BarrierParams:
        return BarrierParams(beta=self.beta)

    def cases_to_run(self) -> List[str]:
        if self.case == "all":
            return list(CASES)
        # the ideal baseline is always needed for degradation percentages
        return list(dict.fromkeys(["ideal-20ms", self.case]))


_INT_KEYS = {"seed", "horizon"}
_STR_KEYS = {"case"}


def parse_config(path: str | Path) -> ExperimentConfig:
    """Read a flat key-value config file; unknown keys are errors."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    known = {f.name: f for f in fields(ExperimentConfig)}
    values: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            if key in _STR_KEYS:
                values[key] = value
            elif key in _INT_KEYS:
                values[key] = int(value)
            else:
                values[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {value!r}") from exc
    config = ExperimentConfig(**values)
    config.validate()
    return config


@dataclass
class IseSeries:
    """Cumulative integral-square-error samples; non-decreasing by construction."""

    times: List[float] = field(default_factory=list)
    values: List[float] = field(default_factory=list)

    @classmethod
    def start(cls, t0: float = 0.0) -> "IseSeries":
        return cls(times=[float(t0)], values=[0.0])

    @property
    def final(self) -> float:
        return self.values[-1] if self.values else 0.0


def ise_accumulate(series: IseSeries, t_prev: float, t_now: float,
                   e_prev: float, e_now: float) -> IseSeries:
    """Trapezoidal update: ISE += (t_now - t_prev) * (e_prev^2 + e_now^2) / 2."""
    if t_now <= t_prev:
        raise ValueError(f"time must advance: t_prev={t_prev}, t_now={t_now}")
    increment = (t_now - t_prev) * (e_prev * e_prev + e_now * e_now) / 2.0
    base = series.values[-1] if series.values else 0.0
    series.times.append(float(t_now))
    series.values.append(base + increment)
    return series


@dataclass
class TaskTrace:
    """Per-task closed-loop record on the micro-step grid."""

    case: str
    task_id: int
    t: Array
    u: Array
    y: Array
    ref: Array
    e: Array
    ise: Array

    @property
    def final_ise(self) -> float:
        return float(self.ise[-1])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    cases: List[str]
    traces: Dict[Tuple[str, int], TaskTrace]
    summary: List[dict]
    jobs: List[JobBudget] = field(default_factory=list)


def run_experiment(config: ExperimentConfig, out_dir: Optional[str | Path] = None) -> ExperimentResult:
    """Run the configured case(s) and, when ``out_dir`` is given, write the CSVs."""
    config.validate()
    cases = config.cases_to_run()
    traces: Dict[Tuple[str, int], TaskTrace] = {}
    jobs: List[JobBudget] = []
    for case in cases:
        case_traces, case_jobs = _simulate_case(config, case)
        for tid, trace in case_traces.items():
            traces[(case, tid)] = trace
        if case == "anytime-20ms":
            jobs = case_jobs
    summary = _summarize(config, cases, traces)
    result = ExperimentResult(config=config, cases=cases, traces=traces,
                              summary=summary, jobs=jobs)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def _summarize(config, cases, traces) -> List[dict]:
    summary = []
    for case in cases:
        for tid in (1, 2):
            final = traces[(case, tid)].final_ise
            ideal = traces[("ideal-20ms", tid)].final_ise
            degradation = 100.0 * (final - ideal) / ideal if ideal > 0.0 else 0.0
            summary.append({
                "case": case,
                "task_id": tid,
                "final_ise": final,
                "degradation_pct": degradation,
            })
    return summary


def _references(config):
    amp1, amp2 = config.ref1_amplitude, config.ref2_amplitude
    return (lambda t: amp1, lambda t: amp2)


def _simulate_case(config: ExperimentConfig, case: str):
    if case not in CASES:
        raise ConfigError(f"unknown case {case!r}")
    motors = config.motors()
    refs = _references(config)
    micro = config.micro_step
    n_steps = int(round(config.sim_length / micro))
    period = config.period_slow if case == "slow-300ms" else config.period_fast
    steps_per_ctrl = int(round(period / micro))

    dp_micro = [discretize(m, micro) for m in motors]
    dp_ctrl = [discretize(m, period) for m in motors]
    mpc_cfgs = [
        MpcConfig(horizon=config.horizon, output_weight=config.output_weight,
                  input_weight=config.input_weight, u_min=config.u_min,
                  u_max=config.u_max, reference=refs[k])
        for k in range(2)
    ]

    jobs: List[JobBudget] = []
    budget_by_window: Dict[Tuple[int, int], int] = {}
    if case == "anytime-20ms":
        tasks = [
            TaskSpec(task_id=k + 1, period=period, wcet=config.wcet,
                     iter_cost=config.iter_cost, anytime=True)
            for k in range(2)
        ]
        jobs = simulate_edf(tasks, config.sim_length, jitter=config.jitter, seed=config.seed)
        for job in jobs:
            window = int(round(job.release / period))
            budget_by_window[(job.task_id, window)] = job.iterations

    barrier_params = config.barrier_params()
    flow_params = config.flow_params()
    mpc_states = [MpcTaskState(), MpcTaskState()]
    oracle_lam: List[Optional[Array]] = [None, None]
    pending: List[Optional[Array]] = [None, None]

    x = [np.zeros(m.n_states) for m in motors]
    u_held = [np.zeros(m.n_inputs) for m in motors]
    n_samples = n_steps + 1
    t_grid = np.arange(n_samples) * micro
    rec_u = [np.zeros(n_samples) for _ in range(2)]
    rec_y = [np.zeros(n_samples) for _ in range(2)]
    rec_ref = [np.zeros(n_samples) for _ in range(2)]
    rec_e = [np.zeros(n_samples) for _ in range(2)]
    series = [IseSeries.start(0.0), IseSeries.start(0.0)]

    for i in range(n_samples):
        t = float(t_grid[i])
        if i < n_steps and i % steps_per_ctrl == 0:
            window = i // steps_per_ctrl
            for k in range(2):
                if case == "anytime-20ms":
                    if pending[k] is not None:
                        u_held[k] = pending[k]
                    budget = budget_by_window.get((k + 1, window), 0)
                    pending[k] = mpc_invoke(
                        mpc_states[k], dp_ctrl[k], mpc_cfgs[k], x[k], t, budget,
                        barrier_params=barrier_params, flow_params=flow_params,
                    )
                else:
                    u_held[k], oracle_lam[k] = _oracle_input(
                        dp_ctrl[k], mpc_cfgs[k], x[k], t, oracle_lam[k]
                    )
        for k in range(2):
            y = float(motors[k].C @ x[k])
            r = float(refs[k](t))
            e = y - r
            rec_u[k][i] = float(u_held[k][0])
            rec_y[k][i] = y
            rec_ref[k][i] = r
            rec_e[k][i] = e
            if i > 0:
                ise_accumulate(series[k], t - micro, t, rec_e[k][i - 1], e)
        if i < n_steps:
            for k in range(2):
                x[k] = simulate_step(dp_micro[k], x[k], u_held[k])

    traces = {}
    for k in range(2):
        traces[k + 1] = TaskTrace(
            case=case, task_id=k + 1, t=t_grid.copy(),
            u=rec_u[k], y=rec_y[k], ref=rec_ref[k], e=rec_e[k],
            ise=np.asarray(series[k].values),
        )
    return traces, jobs


def _oracle_input(dp: DiscretePlant, cfg: MpcConfig, x: Array, t: float, lam_warm):
    refs = np.array([
        np.atleast_1d(cfg.reference(t + (k + 1) * dp.dt)) for k in range(cfg.horizon)
    ], dtype=float)
    qp = build_condensed_qp(dp, cfg, x, refs)
    x_star, lam_star = solve_reference(qp, tol=1e-10, lam0=lam_warm)
    return x_star[:dp.n_inputs].copy(), lam_star


def write_outputs(result: ExperimentResult, out_dir: str | Path) -> None:
    """Write samples.csv and summary.csv (plus jobs.csv for the anytime case)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "samples.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SAMPLES_HEADER.split(","))
        for case in result.cases:
            for tid in (1, 2):
                trace = result.traces[(case, tid)]
                for i in range(trace.t.size):
                    writer.writerow([
                        repr(float(trace.t[i])), tid, case,
                        repr(float(trace.u[i])), repr(float(trace.y[i])),
                        repr(float(trace.ref[i])), repr(float(trace.e[i])),
                        repr(float(trace.ise[i])),
                    ])
    with (out / "summary.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER.split(","))
        for row in result.summary:
            writer.writerow([
                row["case"], row["task_id"],
                repr(float(row["final_ise"])), repr(float(row["degradation_pct"])),
            ])
    if result.jobs:
        write_jobs_csv(result.jobs, out / "jobs.csv")
