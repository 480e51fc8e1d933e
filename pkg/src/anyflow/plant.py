"""Continuous-time linear plants and exact zero-order-hold discretization.

The experiment controls two DC motors; the armature model used here has
states (angular velocity, current) and tracks angular velocity.  Parameters
are configuration defaults, not measured ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

Array = np.ndarray


@dataclass(frozen=True)
class LinearPlant:
    """Continuous dynamics dx/dt = A x + B u with tracked output y = C x."""

    A: Array
    B: Array
    C: Array

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        B = np.asarray(self.B, dtype=float).reshape(n, -1)
        C = np.asarray(self.C, dtype=float).reshape(-1, n)
        if B.shape[1] < 1:
            raise ValueError("plant needs at least one input")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class DiscretePlant:
    """Exact ZOH discretization x+ = Ad x + Bd u at sampling period dt."""

    Ad: Array
    Bd: Array
    C: Array
    dt: float

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("sampling period must be positive")

    @property
    def n_states(self) -> int:
        return self.Ad.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.Bd.shape[1]


def discretize(plant: LinearPlant, dt: float) -> DiscretePlant:
    """Exact zero-order-hold discretization via the augmented matrix exponential."""
    if dt <= 0.0:
        raise ValueError("sampling period must be positive")
    n, nu = plant.n_states, plant.n_inputs
    aug = np.zeros((n + nu, n + nu))
    aug[:n, :n] = plant.A
    aug[:n, n:] = plant.B
    E = expm(aug * dt)
    return DiscretePlant(Ad=E[:n, :n], Bd=E[:n, n:], C=plant.C.copy(), dt=float(dt))


def simulate_step(dp: DiscretePlant, x: Array, u: Array) -> Array:
    """One discrete step x+ = Ad x + Bd u."""
    x = np.asarray(x, dtype=float).ravel()
    u = np.atleast_1d(np.asarray(u, dtype=float)).ravel()
    if x.shape != (dp.n_states,):
        raise ValueError(f"state has dimension {x.size}, expected {dp.n_states}")
    if u.shape != (dp.n_inputs,):
        raise ValueError(f"input has dimension {u.size}, expected {dp.n_inputs}")
    return dp.Ad @ x + dp.Bd @ u


def dc_motor(J: float = 0.01, b: float = 0.1, K: float = 0.01,
             R: float = 1.0, L: float = 0.5) -> LinearPlant:
    """Armature DC-motor model with states (angular velocity, current).

    Tracked output is the angular velocity.
    """
    A = np.array([[-b / J, K / J],
                  [-K / L, -R / L]])
    B = np.array([[0.0], [1.0 / L]])
    C = np.array([[1.0, 0.0]])
    return LinearPlant(A=A, B=B, C=C)


def default_motors() -> tuple[LinearPlant, LinearPlant]:
    """The two motor parameter sets used by the default experiment."""
    return dc_motor(), dc_motor(R=2.0, L=0.8)
