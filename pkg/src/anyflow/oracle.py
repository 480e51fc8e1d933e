"""High-accuracy reference KKT solutions for quadratic programs.

Used for frozen expected values, Lyapunov probes, and the idealized MPC
baselines.  Deliberately shares no solver code with the flow module: the
method here is accelerated projected gradient ascent on the dual, with
multipliers recovered from the active constraints by least squares on the
stationarity condition and a full KKT verification before returning.
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from .problem import QpData

Array = np.ndarray


class ReferenceSolveError(RuntimeError):
    """The reference solver did not reach the requested KKT residual."""


def solve_reference(
    qp: QpData,
    tol: float = 1e-10,
    max_iterations: int = 200_000,
    lam0: Optional[Array] = None,
) -> Tuple[Array, Array]:
    """Solve ``min 0.5 x'Hx + q'x s.t. Gx <= h`` to KKT residual below ``tol``.

    Returns ``(x_star, lam_star)``.  ``lam0`` optionally warm-starts the dual
    iteration.  Raises :class:`ReferenceSolveError` when the iteration cap is
    reached, which signals a degenerate instance.
    """
    H, q, G, h = qp.H, qp.q, qp.G, qp.h
    p = qp.dim
    m = qp.n_constraints
    if m == 0:
        x = np.linalg.solve(H, -q)
        return x, np.zeros(0)

    H_inv = np.linalg.inv(H)
    M = G @ H_inv @ G.T
    lipschitz = float(np.linalg.eigvalsh(M)[-1])
    if lipschitz <= 0.0:
        lipschitz = 1.0

    lam = np.zeros(m) if lam0 is None else np.clip(np.asarray(lam0, float).ravel(), 0.0, None)
    if lam.shape != (m,):
        raise ValueError(f"lam0 has {lam.size} entries, expected {m}")
    y = lam.copy()
    t_acc = 1.0
    check_every = 250
    for it in range(max_iterations):
        x_y = -H_inv @ (q + G.T @ y)
        grad = G @ x_y - h
        lam_next = np.maximum(y + grad / lipschitz, 0.0)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        y = lam_next + ((t_acc - 1.0) / t_next) * (lam_next - lam)
        lam, t_acc = lam_next, t_next
        if (it + 1) % check_every == 0 or it == max_iterations - 1:
            polished = _polish(H, q, G, h, H_inv, lam, tol)
            if polished is not None:
                return polished
    raise ReferenceSolveError(
        f"no KKT point within residual {tol:.1e} after {max_iterations} dual iterations"
    )


def kkt_residual(qp: QpData, x: Array, lam: Array) -> float:
    """Worst violation among stationarity, primal/dual feasibility, complementarity."""
    H, q, G, h = qp.H, qp.q, qp.G, qp.h
    stationarity = float(np.linalg.norm(H @ x + q + (G.T @ lam if qp.n_constraints else 0.0)))
    if qp.n_constraints == 0:
        return stationarity
    slack = G @ x - h
    primal = float(np.max(slack, initial=0.0))
    dual = float(np.max(-lam, initial=0.0))
    comp = float(np.max(np.abs(lam * slack), initial=0.0))
    return max(stationarity, primal, dual, comp)


def _polish(H, q, G, h, H_inv, lam_guess, tol) -> Optional[Tuple[Array, Array]]:
    """Active-set refinement from a dual estimate; None if KKT fails."""
    m = G.shape[0]
    p = H.shape[0]
    x = -H_inv @ (q + G.T @ lam_guess)
    slack = G @ x - h
    active = (lam_guess > 1e-9) | (slack > -1e-9)
    for _ in range(m + 2):
        if not active.any():
            x = -H_inv @ q
            lam = np.zeros(m)
            break
        Ga = G[active]
        n_act = Ga.shape[0]
        kkt = np.zeros((p + n_act, p + n_act))
        kkt[:p, :p] = H
        kkt[:p, p:] = Ga.T
        kkt[p:, :p] = Ga
        rhs = np.concatenate([-q, h[active]])
        sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
        x = sol[:p]
        lam_active = sol[p:]
        if np.all(lam_active >= -1e-12):
            lam = np.zeros(m)
            lam[active] = np.maximum(lam_active, 0.0)
            break
        idx = np.where(active)[0]
        active[idx[lam_active < -1e-12]] = False
    else:
        return None
    residual = _raw_residual(H, q, G, h, x, lam)
    if residual < tol:
        return x, lam
    return None


def _raw_residual(H, q, G, h, x, lam) -> float:
    stationarity = float(np.linalg.norm(H @ x + q + G.T @ lam))
    slack = G @ x - h
    primal = float(np.max(slack, initial=0.0))
    dual = float(np.max(-lam, initial=0.0))
    comp = float(np.max(np.abs(lam * slack), initial=0.0))
    return max(stationarity, primal, dual, comp)
