"""Anytime convex optimization via a barrier primal-dual flow, plus an
EDF-scheduled MPC co-simulation harness for studying control performance
under limited, variable compute budgets."""

from .barrier import BarrierParams, InfeasiblePointError, barrier_grad_lambda, barrier_grad_x, barrier_value
from .flow import FlowParams, FlowState, LyapunovProbe, flow_field, initial_state, lyapunov_value, solve_anytime, step
from .harness import ExperimentConfig, IseSeries, ise_accumulate, parse_config, run_experiment
from .mpc import MpcConfig, MpcTaskState, build_condensed_qp, mpc_invoke, warm_start_shift
from .oracle import ReferenceSolveError, solve_reference
from .plant import DiscretePlant, LinearPlant, dc_motor, default_motors, discretize, simulate_step
from .problem import ProblemInstance, QpData, is_strictly_feasible, make_qp
from .sched import JobBudget, TaskSpec, iteration_budget, schedulable, simulate_edf, utilization

__all__ = [
    "BarrierParams",
    "DiscretePlant",
    "ExperimentConfig",
    "FlowParams",
    "FlowState",
    "InfeasiblePointError",
    "IseSeries",
    "JobBudget",
    "LinearPlant",
    "LyapunovProbe",
    "MpcConfig",
    "MpcTaskState",
    "ProblemInstance",
    "QpData",
    "ReferenceSolveError",
    "TaskSpec",
    "barrier_grad_lambda",
    "barrier_grad_x",
    "barrier_value",
    "build_condensed_qp",
    "dc_motor",
    "default_motors",
    "discretize",
    "flow_field",
    "initial_state",
    "is_strictly_feasible",
    "ise_accumulate",
    "iteration_budget",
    "lyapunov_value",
    "make_qp",
    "mpc_invoke",
    "parse_config",
    "run_experiment",
    "schedulable",
    "simulate_edf",
    "simulate_step",
    "solve_anytime",
    "solve_reference",
    "step",
    "utilization",
    "warm_start_shift",
]
