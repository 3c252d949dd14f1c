"""System models: discrete double integrator for planning, continuous
unicycle with feedback linearization for execution, wheel-speed recovery."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "LinearSystem",
    "UnicycleState",
    "UnicycleTrace",
    "SingularityError",
    "double_integrator_2d",
    "feedback_linearize",
    "wheel_speeds",
    "simulate_unicycle",
    "V_MIN",
]

V_MIN = 1e-3  # linear-speed singularity threshold for the omega extraction
_LATERAL_TOL = 1e-9


class SingularityError(ValueError):
    """Turning demanded at (numerically) zero linear speed."""


@dataclass(frozen=True)
class LinearSystem:
    """Discrete LTI system x_{k+1} = A x_k + B u_k with input bounds."""

    A: np.ndarray
    B: np.ndarray
    dt: float
    state_labels: tuple[str, ...]
    input_labels: tuple[str, ...]
    u_lo: np.ndarray
    u_hi: np.ndarray

    def __post_init__(self) -> None:
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        u_lo = np.asarray(self.u_lo, dtype=float).reshape(-1)
        u_hi = np.asarray(self.u_hi, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if B.shape != (A.shape[0], len(self.input_labels)):
            raise ValueError("B shape does not match A and input labels")
        if len(self.state_labels) != A.shape[0]:
            raise ValueError("state labels do not match A")
        if u_lo.shape != (B.shape[1],) or u_hi.shape != (B.shape[1],):
            raise ValueError("input bounds do not match input dimension")
        if np.any(u_hi < u_lo):
            raise ValueError("input bounds have hi < lo")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "u_lo", u_lo)
        object.__setattr__(self, "u_hi", u_hi)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.A @ np.asarray(x, float) + self.B @ np.asarray(u, float)

    def simulate(self, x0: np.ndarray, inputs: np.ndarray) -> np.ndarray:
        inputs = np.atleast_2d(np.asarray(inputs, float))
        states = np.empty((inputs.shape[0] + 1, self.n))
        states[0] = np.asarray(x0, float)
        for k, u in enumerate(inputs):
            states[k + 1] = self.step(states[k], u)
        return states


def double_integrator_2d(
    dt: float,
    u_lo: Optional[Sequence[float]] = None,
    u_hi: Optional[Sequence[float]] = None,
) -> LinearSystem:
    """Exact zero-order-hold discretization of planar double integrator.

    State (x, y, vx, vy), input (ux, uy): position += dt*vel + dt^2/2 * u,
    velocity += dt*u.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    A = np.array(
        [
            [1.0, 0.0, dt, 0.0],
            [0.0, 1.0, 0.0, dt],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    h = dt * dt / 2.0
    B = np.array([[h, 0.0], [0.0, h], [dt, 0.0], [0.0, dt]])
    lo = np.asarray(u_lo if u_lo is not None else [-math.inf, -math.inf], float)
    hi = np.asarray(u_hi if u_hi is not None else [math.inf, math.inf], float)
    return LinearSystem(A, B, dt, ("x", "y", "vx", "vy"), ("ux", "uy"), lo, hi)


@dataclass
class UnicycleState:
    x: float
    y: float
    theta: float
    v: float


def feedback_linearize(state: UnicycleState, ux: float, uy: float) -> tuple[float, float]:
    """Map planar accelerations to (v_dot, omega) via the rotation R(-theta).

    omega = (-sin(theta) ux + cos(theta) uy) / v is singular at v = 0; below
    V_MIN a lateral demand raises SingularityError, while a purely
    longitudinal demand yields omega = 0.
    """
    ct, st = math.cos(state.theta), math.sin(state.theta)
    v_dot = ct * ux + st * uy
    lateral = -st * ux + ct * uy  # this is v * omega
    if abs(state.v) < V_MIN:
        if abs(lateral) > _LATERAL_TOL:
            raise SingularityError(
                f"lateral acceleration {lateral:.3g} demanded at speed {state.v:.3g}"
            )
        return v_dot, 0.0
    return v_dot, lateral / state.v


def wheel_speeds(v: float, omega: float, d: float) -> tuple[float, float]:
    """Differential-drive wheel speeds v_r = v + d*omega, v_l = v - d*omega."""
    return v + d * omega, v - d * omega


@dataclass
class UnicycleTrace:
    """Fine-grained integration trace plus samples at planner indices."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    omega: np.ndarray
    planner_positions: np.ndarray  # (K+1, 2) sampled every dt

    def wheel_speed_series(self, d: float) -> tuple[np.ndarray, np.ndarray]:
        return self.v + d * self.omega, self.v - d * self.omega


def _unicycle_rates(s: np.ndarray, ux: float, uy: float) -> np.ndarray:
    x, y, theta, v = s
    ct, st = math.cos(theta), math.sin(theta)
    lateral = -st * ux + ct * uy
    if abs(v) < V_MIN:
        if abs(lateral) > _LATERAL_TOL:
            raise SingularityError(
                f"lateral acceleration {lateral:.3g} demanded at speed {v:.3g}"
            )
        omega = 0.0
    else:
        omega = lateral / v
    v_dot = ct * ux + st * uy
    return np.array([v * ct, v * st, omega, v_dot])


def simulate_unicycle(
    initial: UnicycleState,
    inputs: np.ndarray,
    dt: float,
    substeps: int = 20,
) -> UnicycleTrace:
    """RK4 integration of the unicycle under the linearizing control law.

    ``inputs`` is a (K, 2) array of piecewise-constant (ux, uy) per planner
    interval of length dt.
    """
    if substeps < 10:
        raise ValueError("substeps must be at least 10")
    inputs = np.atleast_2d(np.asarray(inputs, float))
    K = inputs.shape[0]
    h = dt / substeps
    total = K * substeps + 1
    t = np.empty(total)
    states = np.empty((total, 4))
    omegas = np.empty(total)
    s = np.array([initial.x, initial.y, initial.theta, initial.v])
    idx = 0
    t[0] = 0.0
    states[0] = s
    omegas[0] = _unicycle_rates(s, *inputs[0])[2] if K > 0 else 0.0
    for k in range(K):
        ux, uy = inputs[k]
        for _ in range(substeps):
            k1 = _unicycle_rates(s, ux, uy)
            k2 = _unicycle_rates(s + 0.5 * h * k1, ux, uy)
            k3 = _unicycle_rates(s + 0.5 * h * k2, ux, uy)
            k4 = _unicycle_rates(s + h * k3, ux, uy)
            s = s + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            idx += 1
            t[idx] = (idx) * h
            states[idx] = s
            omegas[idx] = _unicycle_rates(s, ux, uy)[2]
    planner_positions = states[::substeps, :2].copy()
    return UnicycleTrace(
        t=t,
        x=states[:, 0],
        y=states[:, 1],
        theta=states[:, 2],
        v=states[:, 3],
        omega=omegas,
        planner_positions=planner_positions,
    )
