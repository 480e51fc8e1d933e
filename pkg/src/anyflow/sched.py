"""Single-processor preemptive EDF simulation and per-job compute budgets.

Time here is virtual, not wall-clock: worst-case execution times and
per-iteration costs are configured constants, which keeps every timeline
reproducible.  Two demand models exist:

* fixed-demand tasks run for their WCET and then complete;
* anytime tasks consume every unit of processor time EDF grants them before
  the job deadline (their result is committed at the deadline boundary).

At any instant the ready job with the earliest absolute deadline runs.
Equal-deadline fixed-demand jobs serialize by task id; equal-deadline anytime
jobs split the processor evenly for as long as they tie, which is what shares
compute fairly between identical-period control tasks.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

# absolute time tolerance (seconds) for deadline ties and boundary tests
_TIME_EPS = 1e-9
# remaining-demand tolerance when deciding whether a fixed job missed
_DEMAND_EPS = 1e-9


@dataclass(frozen=True)
class TaskSpec:
    """Periodic task: period, worst-case execution time, per-iteration cost.

    The relative deadline equals the period.  ``anytime`` selects the demand
    model described in the module docstring.
    """

    task_id: int
    period: float
    wcet: float
    iter_cost: float
    anytime: bool = False

    def __post_init__(self):
        if self.period <= 0.0:
            raise ValueError("period must be positive")
        if self.wcet < 0.0:
            raise ValueError("wcet must be nonnegative")
        if self.iter_cost <= 0.0:
            raise ValueError("per-iteration cost must be positive")


@dataclass(frozen=True)
class JobBudget:
    """Outcome of one job: processor time received before its deadline."""

    task_id: int
    release: float
    deadline: float
    allotted: float
    iterations: int
    missed: bool = False


def utilization(tasks: Sequence[TaskSpec]) -> float:
    """Total processor utilization sum(wcet_k / period_k)."""
    return float(sum(t.wcet / t.period for t in tasks))


def schedulable(tasks: Sequence[TaskSpec]) -> bool:
    """EDF schedulability on one processor: utilization at most 1."""
    return utilization(tasks) <= 1.0


def iteration_budget(job, task: TaskSpec, jitter: float = 0.0,
                     rng: Optional[np.random.Generator] = None, seed: int = 0) -> int:
    """Iterations obtainable from a job's allotted processor time.

    ``job`` may be a :class:`JobBudget` or the allotted seconds directly.
    Samples the per-iteration cost as ``iter_cost * (1 + u)`` with u uniform
    on [0, jitter] from a seeded generator, then floors the quotient.  The
    tiny additive epsilon keeps exact divisions (e.g. 0.01 s / 1e-5 s) from
    losing an iteration to float rounding.
    """
    job_allotted = job.allotted if isinstance(job, JobBudget) else float(job)
    if job_allotted < 0.0:
        raise ValueError("allotted time must be nonnegative")
    if jitter < 0.0:
        raise ValueError("jitter amplitude must be nonnegative")
    if rng is None:
        rng = np.random.default_rng(seed)
    cost = task.iter_cost * (1.0 + (jitter * rng.uniform() if jitter > 0.0 else 0.0))
    return int(np.floor(job_allotted / cost + 1e-9))


class _Job:
    __slots__ = ("task", "release", "deadline", "remaining", "received")

    def __init__(self, task: TaskSpec, release: float):
        self.task = task
        self.release = release
        self.deadline = release + task.period
        self.remaining = None if task.anytime else task.wcet
        self.received = 0.0


def simulate_edf(tasks: Sequence[TaskSpec], horizon: float,
                 jitter: float = 0.0, seed: int = 0) -> List[JobBudget]:
    """Simulate preemptive EDF over [0, horizon] and return one record per job.

    Only complete windows are simulated (jobs whose deadline is within the
    horizon).  Deadline misses of fixed-demand jobs are recorded, not fatal;
    a job never executes past its deadline.  Identical seeds produce
    identical timelines.
    """
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    ids = [t.task_id for t in tasks]
    if len(set(ids)) != len(ids):
        raise ValueError("task ids must be unique")

    jobs: List[_Job] = []
    for task in tasks:
        count = int(np.floor(horizon / task.period + _TIME_EPS))
        jobs.extend(_Job(task, j * task.period) for j in range(count))
    jobs.sort(key=lambda j: (j.release, j.task.task_id))

    pending = list(jobs)
    idx = 0
    active: List[_Job] = []
    finished: List[_Job] = []
    t = 0.0
    while idx < len(pending) or active:
        while idx < len(pending) and pending[idx].release <= t + _TIME_EPS:
            active.append(pending[idx])
            idx += 1
        if not active:
            t = pending[idx].release
            continue

        d_min = min(j.deadline for j in active)
        group = [j for j in active if j.deadline <= d_min + _TIME_EPS]
        t_next = d_min
        if idx < len(pending):
            t_next = min(t_next, pending[idx].release)

        fixed_ready = sorted(
            (j for j in group if not j.task.anytime and j.remaining > _DEMAND_EPS),
            key=lambda j: j.task.task_id,
        )
        if fixed_ready:
            running = fixed_ready[0]
            t_end = min(t_next, t + running.remaining)
            span = t_end - t
            running.remaining -= span
            running.received += span
        else:
            anytime_group = [j for j in group if j.task.anytime]
            t_end = t_next
            if anytime_group:
                share = (t_end - t) / len(anytime_group)
                for j in anytime_group:
                    j.received += share
        t = t_end

        still_active: List[_Job] = []
        for j in active:
            done_fixed = (not j.task.anytime) and j.remaining <= _DEMAND_EPS
            past_deadline = j.deadline <= t + _TIME_EPS
            if done_fixed or past_deadline:
                finished.append(j)
            else:
                still_active.append(j)
        active = still_active

    finished.sort(key=lambda j: (j.release, j.task.task_id))
    rng = np.random.default_rng(seed)
    records: List[JobBudget] = []
    for j in finished:
        missed = (not j.task.anytime) and j.remaining > _DEMAND_EPS
        records.append(JobBudget(
            task_id=j.task.task_id,
            release=j.release,
            deadline=j.deadline,
            allotted=j.received,
            iterations=iteration_budget(j.received, j.task, jitter=jitter, rng=rng),
            missed=missed,
        ))
    return records


def write_jobs_csv(jobs: Iterable[JobBudget], path: str | Path) -> None:
    """Export a job timeline with the schema task_id,release,deadline,allotted_s,iterations,missed."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task_id", "release", "deadline", "allotted_s", "iterations", "missed"])
        for job in jobs:
            writer.writerow([
                job.task_id,
                repr(job.release),
                repr(job.deadline),
                repr(job.allotted),
                job.iterations,
                int(job.missed),
            ])
