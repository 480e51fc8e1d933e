"""Problem containers: strongly convex objectives with inequality constraints.

General problems are supplied as evaluator bundles; quadratic programs get a
validating constructor (``make_qp``) because the MPC stack and most tests
reduce to QPs.  A :class:`ProblemInstance` is immutable after construction and
safe to share between concurrently running solver instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

Array = np.ndarray

# Positive-definiteness rejection threshold: smallest eigenvalue at or below
# this value fails construction.
PD_EIGENVALUE_FLOOR = 1e-12
SYMMETRY_ATOL = 1e-10


@dataclass(frozen=True)
class QpData:
    """Matrices of ``min 0.5 x'Hx + q'x  s.t.  Gx - h <= 0``.

    ``H`` must be symmetric positive definite (checked), each row of ``G``
    must be nonzero (checked).  ``G``/``h`` may be empty for unconstrained
    problems.
    """

    H: Array
    q: Array
    G: Array
    h: Array

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        q = np.asarray(self.q, dtype=float).ravel()
        p = H.shape[0]
        if H.shape != (p, p):
            raise ValueError(f"H must be square, got shape {H.shape}")
        if q.shape != (p,):
            raise ValueError(f"q has shape {q.shape}, expected ({p},)")
        G = np.asarray(self.G, dtype=float).reshape(-1, p) if np.size(self.G) else np.zeros((0, p))
        h = np.asarray(self.h, dtype=float).ravel()
        if h.shape != (G.shape[0],):
            raise ValueError(f"h has {h.shape[0]} entries, expected {G.shape[0]}")
        if np.max(np.abs(H - H.T), initial=0.0) > SYMMETRY_ATOL:
            raise ValueError("H failed the symmetry check (|H - H'| exceeds 1e-10)")
        eig_min = float(np.linalg.eigvalsh(H)[0]) if p else 0.0
        if eig_min <= PD_EIGENVALUE_FLOOR:
            raise ValueError(
                f"H failed the positive-definiteness check (smallest eigenvalue {eig_min:.3e})"
            )
        row_norms = np.linalg.norm(G, axis=1) if G.shape[0] else np.zeros(0)
        zero_rows = np.where(row_norms == 0.0)[0]
        if zero_rows.size:
            raise ValueError(f"constraint row {int(zero_rows[0])} of G is all zeros")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def n_constraints(self) -> int:
        return self.G.shape[0]


@dataclass(frozen=True)
class ProblemInstance:
    """Strongly convex objective with ``m`` inequality constraints ``f_i(x) <= 0``.

    ``strong_convexity`` is trusted metadata supplied by the constructor
    (computed exactly for QPs, asserted by the caller otherwise).
    """

    dim: int
    objective: Callable[[Array], float]
    objective_grad: Callable[[Array], Array]
    constraints: Tuple[Callable[[Array], float], ...]
    constraint_grads: Tuple[Callable[[Array], Array], ...]
    strong_convexity: float
    qp: Optional[QpData] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("problem dimension must be at least 1")
        if self.strong_convexity <= 0.0:
            raise ValueError("strong-convexity modulus must be positive")
        if len(self.constraints) != len(self.constraint_grads):
            raise ValueError("constraints and constraint_grads differ in length")

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)


def constraint_values(problem: ProblemInstance, x: Array) -> Array:
    """All constraint values ``f_i(x)`` as an (m,) array."""
    x = _check_point(problem, x)
    if problem.qp is not None:
        qp = problem.qp
        return qp.G @ x - qp.h
    return np.array([fi(x) for fi in problem.constraints], dtype=float)


def constraint_jacobian(problem: ProblemInstance, x: Array) -> Array:
    """Stacked constraint gradients as an (m, p) array."""
    x = _check_point(problem, x)
    if problem.qp is not None:
        return problem.qp.G.copy()
    if not problem.constraints:
        return np.zeros((0, problem.dim))
    return np.vstack([np.asarray(g(x), dtype=float).ravel() for g in problem.constraint_grads])


def make_qp(H, q, G=None, h=None) -> ProblemInstance:
    """Build a :class:`ProblemInstance` for ``min 0.5 x'Hx + q'x  s.t.  Gx <= h``.

    The strong-convexity modulus is set to the smallest eigenvalue of ``H``.
    Raises ``ValueError`` naming the failed check for non-symmetric or
    non-positive-definite ``H`` and for all-zero rows of ``G``.
    """
    if G is None:
        G = np.zeros((0, np.asarray(q).size))
    if h is None:
        h = np.zeros(0)
    qp = QpData(H=H, q=q, G=G, h=h)
    mu = float(np.linalg.eigvalsh(qp.H)[0])

    H_, q_, G_, h_ = qp.H, qp.q, qp.G, qp.h

    def objective(x: Array) -> float:
        x = np.asarray(x, dtype=float).ravel()
        return float(0.5 * x @ H_ @ x + q_ @ x)

    def objective_grad(x: Array) -> Array:
        x = np.asarray(x, dtype=float).ravel()
        return H_ @ x + q_

    def _constraint(i: int) -> Callable[[Array], float]:
        gi, hi = G_[i], h_[i]
        return lambda x: float(gi @ np.asarray(x, dtype=float).ravel() - hi)

    def _constraint_grad(i: int) -> Callable[[Array], Array]:
        gi = G_[i]
        return lambda x: gi.copy()

    m = qp.n_constraints
    return ProblemInstance(
        dim=qp.dim,
        objective=objective,
        objective_grad=objective_grad,
        constraints=tuple(_constraint(i) for i in range(m)),
        constraint_grads=tuple(_constraint_grad(i) for i in range(m)),
        strong_convexity=mu,
        qp=qp,
    )


def is_strictly_feasible(problem: ProblemInstance, x: Array, margin: float = 0.0) -> bool:
    """True iff ``f_i(x) < -margin`` for every constraint (vacuously true for m=0)."""
    if problem.n_constraints == 0:
        return True
    return bool(np.all(constraint_values(problem, x) < -margin))


def _check_point(problem: ProblemInstance, x: Array) -> Array:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (problem.dim,):
        raise ValueError(f"point has dimension {x.size}, expected {problem.dim}")
    return x
