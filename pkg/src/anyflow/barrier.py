"""Modified log-barrier function: value plus gradients in both arguments.

The barrier couples the objective with the constraints through dual weights:

    B(x, lam) = f0(x) - sum_i lam_i * log(-beta*(f_i(x) + 1/beta) + 1)

The log argument is evaluated literally in that form (not algebraically
simplified) so the floating-point behaviour near ``f_i = -1/beta`` is the
stated one.  All functions here are stateless and freely parallelizable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import ProblemInstance, constraint_jacobian, constraint_values

Array = np.ndarray


@dataclass(frozen=True)
class BarrierParams:
    """Barrier parameter ``beta`` (> 0). The experiments use 1e5."""

    beta: float = 1e5

    def __post_init__(self):
        if self.beta <= 0.0:
            raise ValueError("barrier parameter beta must be positive")


class InfeasiblePointError(ValueError):
    """Evaluation point violates strict feasibility of one constraint.

    Carries the offending constraint index and its value.
    """

    def __init__(self, index: int, value: float):
        self.index = int(index)
        self.value = float(value)
        super().__init__(
            f"barrier undefined: constraint {self.index} has f(x) = {self.value:.6g} "
            "(needs f(x) < 0)"
        )


def log_arguments(problem: ProblemInstance, params: BarrierParams, x: Array) -> Array:
    """The per-constraint log arguments ``a_i = -beta*(f_i(x) + 1/beta) + 1``.

    Raises :class:`InfeasiblePointError` if any ``a_i <= 0``.
    """
    beta = params.beta
    f = constraint_values(problem, x)
    a = -beta * (f + 1.0 / beta) + 1.0
    bad = np.where(a <= 0.0)[0]
    if bad.size:
        i = int(bad[0])
        raise InfeasiblePointError(i, f[i])
    return a


def barrier_value(problem: ProblemInstance, params: BarrierParams, x: Array, lam: Array) -> float:
    """Evaluate ``B(x, lam)`` at a strictly feasible point with ``lam >= 0``."""
    lam = _check_multipliers(problem, lam)
    x = np.asarray(x, dtype=float).ravel()
    value = float(problem.objective(x))
    if problem.n_constraints:
        a = log_arguments(problem, params, x)
        value -= float(lam @ np.log(a))
    return value


def barrier_grad_x(problem: ProblemInstance, params: BarrierParams, x: Array, lam: Array) -> Array:
    """Gradient of the barrier in the primal argument.

    Equals ``grad f0(x) + sum_i lam_i * beta * grad f_i(x) / a_i`` by the
    chain rule on the log term.
    """
    lam = _check_multipliers(problem, lam)
    x = np.asarray(x, dtype=float).ravel()
    g = np.asarray(problem.objective_grad(x), dtype=float).ravel().copy()
    if problem.n_constraints:
        a = log_arguments(problem, params, x)
        J = constraint_jacobian(problem, x)
        g += J.T @ (lam * params.beta / a)
    return g


def barrier_grad_lambda(problem: ProblemInstance, params: BarrierParams, x: Array, lam: Array) -> Array:
    """Gradient of the barrier in the dual argument: component i is ``-log(a_i)``.

    Independent of ``lam`` (the barrier is linear in the multipliers); ``lam``
    is still validated because the evaluation point must be a legal barrier
    argument.
    """
    _check_multipliers(problem, lam)
    if problem.n_constraints == 0:
        return np.zeros(0)
    a = log_arguments(problem, params, np.asarray(x, dtype=float).ravel())
    return -np.log(a)


def _check_multipliers(problem: ProblemInstance, lam: Array) -> Array:
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.shape != (problem.n_constraints,):
        raise ValueError(
            f"multiplier vector has {lam.size} entries, expected {problem.n_constraints}"
        )
    if np.any(lam < 0.0):
        i = int(np.where(lam < 0.0)[0][0])
        raise ValueError(f"multiplier {i} is negative ({lam[i]:.6g}); domain requires lam >= 0")
    return lam
