"""Condensed box-constrained QPs for reference-tracking MPC, with warm starts.

Predicted states are eliminated, leaving the stacked input sequence
U = (u_0, ..., u_{N-1}) as the decision vector.  Input bounds are the only
constraints, so a strictly interior start (the box center) always exists and
the anytime solver can return a usable input for any compute budget,
including zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .barrier import BarrierParams
from .flow import FlowParams, initial_state, solve_anytime
from .plant import DiscretePlant
from .problem import ProblemInstance, QpData, make_qp

Array = np.ndarray


@dataclass(frozen=True)
class MpcConfig:
    """Horizon, weights, input box, and the reference signal (a function of time).

    With ``input_reference`` enabled the input penalty is centered on the
    steady-state input consistent with the reference instead of on zero, so
    tracking is offset-free regardless of horizon length; without it a finite
    horizon leaves a weight- and horizon-dependent steady error.
    """

    horizon: int = 10
    output_weight: Array | float = 1.0   # PSD weight on the tracked output error
    input_weight: Array | float = 0.01   # PD weight on the inputs
    u_min: Array | float = -10.0
    u_max: Array | float = 10.0
    reference: Callable[[float], float | Array] = lambda t: 1.0
    input_reference: bool = True

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")

    def bounds(self, n_u: int) -> tuple[Array, Array]:
        lo = np.broadcast_to(np.asarray(self.u_min, dtype=float), (n_u,)).copy()
        hi = np.broadcast_to(np.asarray(self.u_max, dtype=float), (n_u,)).copy()
        if np.any(lo >= hi):
            raise ValueError("u_min must be strictly below u_max componentwise")
        return lo, hi


@dataclass
class MpcTaskState:
    """Per-task solver memory: last input sequence and last applied input."""

    u_seq: Optional[Array] = None
    applied: Optional[Array] = None
    lam: Optional[Array] = None


def prediction_matrices(dp: DiscretePlant, horizon: int) -> tuple[Array, Array]:
    """Stacked state predictions X = Phi x0 + Gamma U for x_1..x_N."""
    n, nu = dp.n_states, dp.n_inputs
    powers = [np.eye(n)]
    for _ in range(horizon):
        powers.append(dp.Ad @ powers[-1])
    phi = np.vstack(powers[1:])
    gamma = np.zeros((horizon * n, horizon * nu))
    for k in range(1, horizon + 1):
        for j in range(k):
            gamma[(k - 1) * n:k * n, j * nu:(j + 1) * nu] = powers[k - 1 - j] @ dp.Bd
    return phi, gamma


def steady_input(dp: DiscretePlant, ref_value: Array | float) -> Array:
    """Input holding the tracked output at ``ref_value`` in steady state."""
    n = dp.n_states
    ref = np.atleast_1d(np.asarray(ref_value, dtype=float)).ravel()
    dc_gain = dp.C @ np.linalg.solve(np.eye(n) - dp.Ad, dp.Bd)
    u, *_ = np.linalg.lstsq(dc_gain, ref, rcond=None)
    return u


def build_condensed_qp(dp: DiscretePlant, cfg: MpcConfig, x0: Array, ref_window: Array) -> QpData:
    """Condense the tracking problem over the horizon into a box-constrained QP.

    The cost is 0.5*sum_k (C x_k - r_k)' Qy (C x_k - r_k) + 0.5*sum_k
    (u_k - u_ref_k)' R (u_k - u_ref_k) for k = 1..N, with terminal weight
    equal to the stage weight (``u_ref`` is zero when ``input_reference`` is
    disabled).  Box bounds u_min <= u_k <= u_max become 2*N*n_u linear
    inequalities: the +I rows come first, then the -I rows.
    """
    n, nu = dp.n_states, dp.n_inputs
    ny = dp.C.shape[0]
    N = cfg.horizon
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.shape != (n,):
        raise ValueError(f"x0 has dimension {x0.size}, expected {n}")
    refs = np.asarray(ref_window, dtype=float).reshape(-1, ny)
    if refs.shape[0] != N:
        raise ValueError(f"reference window has {refs.shape[0]} entries, expected {N}")

    Qy = np.atleast_2d(np.asarray(cfg.output_weight, dtype=float))
    if Qy.shape == (1, 1) and ny > 1:
        Qy = Qy[0, 0] * np.eye(ny)
    if Qy.shape != (ny, ny):
        raise ValueError(f"output weight has shape {Qy.shape}, expected ({ny},{ny})")
    if np.linalg.eigvalsh(0.5 * (Qy + Qy.T))[0] < -1e-12:
        raise ValueError("output weight must be positive semidefinite")
    R = np.atleast_2d(np.asarray(cfg.input_weight, dtype=float))
    if R.shape == (1, 1) and nu > 1:
        R = R[0, 0] * np.eye(nu)
    if R.shape != (nu, nu):
        raise ValueError(f"input weight has shape {R.shape}, expected ({nu},{nu})")
    if np.linalg.eigvalsh(0.5 * (R + R.T))[0] <= 0.0:
        raise ValueError("input weight must be positive definite")

    phi, gamma = prediction_matrices(dp, N)
    C_bar = np.kron(np.eye(N), dp.C)
    Q_bar = np.kron(np.eye(N), Qy)
    R_bar = np.kron(np.eye(N), R)

    CG = C_bar @ gamma
    H = CG.T @ Q_bar @ CG + R_bar
    H = 0.5 * (H + H.T)
    err0 = C_bar @ (phi @ x0) - refs.ravel()
    q = CG.T @ (Q_bar @ err0)
    if cfg.input_reference:
        u_ref = np.concatenate([steady_input(dp, refs[k]) for k in range(N)])
        q = q - R_bar @ u_ref

    lo, hi = cfg.bounds(nu)
    eye = np.eye(N * nu)
    G = np.vstack([eye, -eye])
    h = np.concatenate([np.tile(hi, N), -np.tile(lo, N)])
    return QpData(H=H, q=q, G=G, h=h)


def warm_start_shift(prev_u: Array, n_u: int) -> Array:
    """Shift the stacked input sequence one step, duplicating the last block."""
    prev_u = np.asarray(prev_u, dtype=float).ravel()
    if prev_u.size % n_u != 0:
        raise ValueError(f"sequence length {prev_u.size} is not a multiple of n_u={n_u}")
    N = prev_u.size // n_u
    if N <= 1:
        return prev_u.copy()
    return np.concatenate([prev_u[n_u:], prev_u[-n_u:]])


def box_center_sequence(cfg: MpcConfig, n_u: int) -> Array:
    lo, hi = cfg.bounds(n_u)
    return np.tile(0.5 * (lo + hi), cfg.horizon)


def mpc_invoke(
    task_state: MpcTaskState,
    dp: DiscretePlant,
    cfg: MpcConfig,
    x0: Array,
    t: float,
    budget: int,
    barrier_params: BarrierParams = BarrierParams(),
    flow_params: FlowParams = FlowParams(),
) -> Array:
    """One anytime MPC invocation; returns the first input block.

    The solve starts from the shifted previous sequence (box center on the
    first call) with unit multipliers; the returned input is strictly inside
    the bounds for any budget, including zero.
    """
    n_u = dp.n_inputs
    refs = np.array([
        np.atleast_1d(cfg.reference(t + (k + 1) * dp.dt)) for k in range(cfg.horizon)
    ], dtype=float)
    qp = build_condensed_qp(dp, cfg, x0, refs)
    problem = _problem_from_qp(qp)
    if task_state.u_seq is None:
        u_init = box_center_sequence(cfg, n_u)
    else:
        u_init = warm_start_shift(task_state.u_seq, n_u)
    init = initial_state(problem, u_init)
    final = solve_anytime(problem, barrier_params, flow_params, init, budget)
    task_state.u_seq = final.x.copy()
    task_state.lam = final.lam.copy()
    task_state.applied = final.x[:n_u].copy()
    return task_state.applied.copy()


def _problem_from_qp(qp: QpData) -> ProblemInstance:
    return make_qp(qp.H, qp.q, qp.G, qp.h)
