"""Anytime integration of the projected primal-dual barrier flow.

The continuous dynamics move the primal variable down the barrier gradient
and the multipliers up it, with a normal-cone projection keeping the
multipliers nonnegative:

    dx/dt     = -sigma * grad_x B(x, lam)
    dlam_i/dt = +sigma * (grad_lam_i B(x, lam) + Psi_i)

Each budget iteration advances ``step_size`` seconds of virtual time.  The
integrator is the backward-Euler resolvent of this projected field (see
``_kernels``): explicit stepping is unstable inside the barrier wall layer at
the default gain/step/beta, while the resolvent shares the exact same
stationary points, is unconditionally stable, and keeps every iterate
strictly feasible.  Step-size backtracking remains as the safety net, so a
solve can be interrupted after any iteration with a feasible answer.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from . import _kernels
from .barrier import BarrierParams, barrier_grad_lambda, barrier_grad_x, log_arguments
from .problem import ProblemInstance, constraint_jacobian, constraint_values, is_strictly_feasible

Array = np.ndarray


@dataclass(frozen=True)
class FlowParams:
    """Integrator settings.

    ``gain`` is the flow gain sigma (> 0), ``step_size`` the virtual seconds
    advanced per iteration, ``feas_margin`` the strict-feasibility margin used
    by the backtracking safeguard, ``backtrack_factor`` the step shrink factor
    in (0, 1), and ``stall_limit`` the number of consecutive rejected
    iterations after which an anytime solve gives up.
    """

    gain: float = 10.0
    step_size: float = 1e-3
    feas_margin: float = 1e-9
    backtrack_factor: float = 0.5
    max_backtracks: int = 60
    stall_limit: int = 10

    def __post_init__(self):
        if self.gain <= 0.0:
            raise ValueError("gain must be positive")
        if self.step_size <= 0.0:
            raise ValueError("step_size must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.feas_margin < 0.0:
            raise ValueError("feas_margin must be nonnegative")


@dataclass(frozen=True)
class FlowState:
    """Entire mutable state of one anytime solve: iterates plus step counters."""

    x: Array
    lam: Array
    iterations: int = 0
    last_step_accepted: bool = True

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).ravel().copy())
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float).ravel().copy())


@dataclass(frozen=True)
class LyapunovProbe:
    """Reference optimum (x*, lam*) for the distance-based Lyapunov probe."""

    x_opt: Array
    lam_opt: Array

    def __post_init__(self):
        object.__setattr__(self, "x_opt", np.asarray(self.x_opt, dtype=float).ravel().copy())
        object.__setattr__(self, "lam_opt", np.asarray(self.lam_opt, dtype=float).ravel().copy())
        if np.any(self.lam_opt < 0.0):
            raise ValueError("probe multipliers must be nonnegative")


def initial_state(problem: ProblemInstance, x0, lam=None) -> FlowState:
    """Build a strictly feasible starting state; multipliers default to ones."""
    x0 = np.asarray(x0, dtype=float).ravel()
    if lam is None:
        lam = np.ones(problem.n_constraints)
    state = FlowState(x=x0, lam=lam)
    _check_state(problem, state)
    return state


def flow_field(
    problem: ProblemInstance,
    barrier_params: BarrierParams,
    flow_params: FlowParams,
    state: FlowState,
) -> Tuple[Array, Array]:
    """Projected flow field (dx, dlam) at the current state.

    The raw dual rate is clamped to zero on components sitting at lam_i = 0
    with an outward (negative) rate; that is the normal-cone projection.
    """
    gx = barrier_grad_x(problem, barrier_params, state.x, state.lam)
    gl = barrier_grad_lambda(problem, barrier_params, state.x, state.lam)
    dx = -flow_params.gain * gx
    dlam = flow_params.gain * gl
    if dlam.size:
        clamp = (state.lam == 0.0) & (dlam < 0.0)
        dlam[clamp] = 0.0
    return dx, dlam


def step(
    problem: ProblemInstance,
    barrier_params: BarrierParams,
    flow_params: FlowParams,
    state: FlowState,
) -> FlowState:
    """Advance one iteration; the returned state is always strictly feasible.

    On success the iteration counter increments and ``last_step_accepted`` is
    True; if every backtracked attempt fails the state is returned unchanged
    with ``last_step_accepted`` False.
    """
    _check_state(problem, state)
    ok, x_new, lam_new = _attempt(problem, barrier_params, flow_params, state)
    if not ok:
        return replace(state, last_step_accepted=False)
    return FlowState(
        x=x_new,
        lam=lam_new,
        iterations=state.iterations + 1,
        last_step_accepted=True,
    )


def solve_anytime(
    problem: ProblemInstance,
    barrier_params: BarrierParams,
    flow_params: FlowParams,
    init: FlowState,
    budget: int,
) -> FlowState:
    """Run up to ``budget`` iterations; the result is strictly feasible for any budget.

    Raises ``ValueError`` before any stepping if the initial state is not
    strictly feasible or has negative multipliers.  Stops early if
    ``stall_limit`` consecutive iterations are rejected.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    _check_state(problem, init)
    if budget == 0:
        return init
    if problem.qp is not None:
        qp = problem.qp
        x = init.x.copy()
        lam = init.lam.copy()
        accepted, last_ok, _stalled = _kernels.run_steps(
            qp.H, qp.q, qp.G, qp.h, x, lam,
            barrier_params.beta, flow_params.gain, flow_params.step_size,
            int(budget), flow_params.feas_margin, flow_params.backtrack_factor,
            int(flow_params.max_backtracks), int(flow_params.stall_limit), 60,
        )
        return FlowState(
            x=x, lam=lam,
            iterations=init.iterations + int(accepted),
            last_step_accepted=bool(last_ok),
        )
    state = init
    consecutive_rejects = 0
    for _ in range(budget):
        nxt = step(problem, barrier_params, flow_params, state)
        if nxt.last_step_accepted:
            consecutive_rejects = 0
        else:
            consecutive_rejects += 1
        state = nxt
        if consecutive_rejects >= flow_params.stall_limit:
            break
    return state


def lyapunov_value(flow_params: FlowParams, state: FlowState, probe: LyapunovProbe) -> float:
    """Squared distance to the probe optimum, scaled by 1/(2*gain)."""
    if probe.x_opt.shape != state.x.shape or probe.lam_opt.shape != state.lam.shape:
        raise ValueError("probe dimensions do not match the flow state")
    dx = state.x - probe.x_opt
    dl = state.lam - probe.lam_opt
    return float((dx @ dx + dl @ dl) / (2.0 * flow_params.gain))


def _attempt(problem, barrier_params, flow_params, state):
    """One backtracked resolvent attempt.  Returns (ok, x_new, lam_new)."""
    if problem.qp is not None:
        qp = problem.qp
        x = state.x.copy()
        lam = state.lam.copy()
        accepted, last_ok, _ = _kernels.run_steps(
            qp.H, qp.q, qp.G, qp.h, x, lam,
            barrier_params.beta, flow_params.gain, flow_params.step_size,
            1, flow_params.feas_margin, flow_params.backtrack_factor,
            int(flow_params.max_backtracks), int(flow_params.stall_limit), 60,
        )
        return bool(accepted == 1 and last_ok), x, lam
    tau = flow_params.gain * flow_params.step_size
    for _ in range(flow_params.max_backtracks + 1):
        out = _resolvent_generic(problem, barrier_params, tau, state.x, state.lam,
                                 flow_params.feas_margin)
        if out is not None:
            return True, out[0], out[1]
        tau *= flow_params.backtrack_factor
    return False, state.x, state.lam


def _resolvent_generic(problem, barrier_params, tau, x, lam, eps, max_iter=400):
    """Damped fixed-point solve of the resolvent for evaluator-bundle problems.

    Iterates z <- x - tau*grad_x B(z, w(z)) with w = max(0, lam - tau*log a(z)),
    keeping z strictly feasible.  Returns (z, w) or None when the iteration
    does not contract at this tau (caller then shrinks tau).
    """
    beta = barrier_params.beta
    z = x.copy()
    prev_res = np.inf
    grew = 0
    for _ in range(max_iter):
        a = _log_args_or_none(problem, barrier_params, z)
        if a is None:
            return None
        w = lam - tau * np.log(a)
        np.maximum(w, 0.0, out=w)
        g = np.asarray(problem.objective_grad(z), dtype=float).ravel().copy()
        if problem.n_constraints:
            J = constraint_jacobian(problem, z)
            g += J.T @ (w * beta / a)
        target = x - tau * g
        res = float(np.linalg.norm(target - z))
        if res <= 1e-12 * (1.0 + float(np.linalg.norm(z))):
            break
        if res > prev_res:
            grew += 1
            if grew >= 3:
                return None
        prev_res = res
        # move toward the fixed point, backing off at the feasibility boundary
        theta = 1.0
        moved = False
        while theta > 1e-8:
            z_try = z + theta * (target - z)
            fvals = constraint_values(problem, z_try) if problem.n_constraints else np.zeros(0)
            if fvals.size == 0 or np.all(fvals < -eps):
                z = z_try
                moved = True
                break
            theta *= 0.5
        if not moved:
            return None
    else:
        return None
    a = _log_args_or_none(problem, barrier_params, z)
    if a is None:
        return None
    if problem.n_constraints and not np.all(constraint_values(problem, z) < -eps):
        return None
    w = lam - tau * np.log(a)
    np.maximum(w, 0.0, out=w)
    return z, w


def _log_args_or_none(problem, barrier_params, z):
    try:
        return log_arguments(problem, barrier_params, z)
    except ValueError:
        return None


def _check_state(problem: ProblemInstance, state: FlowState) -> None:
    if state.x.shape != (problem.dim,):
        raise ValueError(f"state x has dimension {state.x.size}, expected {problem.dim}")
    if state.lam.shape != (problem.n_constraints,):
        raise ValueError(
            f"state has {state.lam.size} multipliers, expected {problem.n_constraints}"
        )
    if np.any(state.lam < 0.0):
        raise ValueError("state multipliers must be nonnegative")
    if not is_strictly_feasible(problem, state.x, 0.0):
        raise ValueError("state is not strictly feasible")
