"""Kinematic state, control and propagation for the base and both end-effectors.

Array layout used throughout the package:

    state   (9,)  x, y, theta, left xyz, right xyz   (end-effectors in the base frame)
    control (8,)  v, omega, left pdot xyz, right pdot xyz
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .utils.constants import TWO_PI, WHEEL_RADIUS, WHEELBASE

STATE_DIM = 9
CONTROL_DIM = 8

Vec3 = tuple[float, float, float]


def wrap_angle(theta: float) -> float:
    """Wrap to the half-open interval (-pi, pi]."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise DomainError(f"cannot wrap non-finite angle {theta!r}")
    r = math.remainder(theta, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


def _vec3(p) -> Vec3:
    a = np.asarray(p, dtype=float).reshape(-1)
    if a.shape != (3,):
        raise ConfigurationError(f"expected a 3-vector, got shape {a.shape}")
    return (float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class BasePose:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class WholeBodyState:
    base: BasePose
    p_left: Vec3 = (0.0, 0.0, 0.0)
    p_right: Vec3 = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "p_left", _vec3(self.p_left))
        object.__setattr__(self, "p_right", _vec3(self.p_right))

    def flatten(self) -> np.ndarray:
        b = self.base
        return np.array([b.x, b.y, b.theta, *self.p_left, *self.p_right])

    @classmethod
    def from_array(cls, a) -> "WholeBodyState":
        a = np.asarray(a, dtype=float)
        if a.shape != (STATE_DIM,):
            raise ConfigurationError(f"state must have {STATE_DIM} entries, got shape {a.shape}")
        return cls(BasePose(a[0], a[1], a[2]), tuple(a[3:6]), tuple(a[6:9]))


@dataclass(frozen=True)
class ControlInput:
    v: float = 0.0
    omega: float = 0.0
    pdot_left: Vec3 = (0.0, 0.0, 0.0)
    pdot_right: Vec3 = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "v", float(self.v))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "pdot_left", _vec3(self.pdot_left))
        object.__setattr__(self, "pdot_right", _vec3(self.pdot_right))

    def flatten(self) -> np.ndarray:
        return np.array([self.v, self.omega, *self.pdot_left, *self.pdot_right])

    @classmethod
    def from_array(cls, a) -> "ControlInput":
        a = np.asarray(a, dtype=float)
        if a.shape != (CONTROL_DIM,):
            raise ConfigurationError(f"control must have {CONTROL_DIM} entries, got shape {a.shape}")
        return cls(a[0], a[1], tuple(a[2:5]), tuple(a[5:8]))

    def clamped(self, v_max: float, omega_max: float, pdot_max: float) -> "ControlInput":
        return ControlInput(
            float(np.clip(self.v, -v_max, v_max)),
            float(np.clip(self.omega, -omega_max, omega_max)),
            tuple(np.clip(self.pdot_left, -pdot_max, pdot_max)),
            tuple(np.clip(self.pdot_right, -pdot_max, pdot_max)),
        )


@dataclass(frozen=True)
class DriveGeometry:
    wheel_radius: float = WHEEL_RADIUS
    wheelbase: float = WHEELBASE

    def __post_init__(self):
        if not (self.wheel_radius > 0 and self.wheelbase > 0):
            raise ConfigurationError(
                f"wheel radius and wheelbase must be positive, got r={self.wheel_radius} L={self.wheelbase}"
            )


def _check_dt(dt: float) -> float:
    dt = float(dt)
    if not (math.isfinite(dt) and dt > 0):
        raise ConfigurationError(f"time step must be > 0, got {dt}")
    return dt


def step_base(pose: BasePose, v: float, omega: float, dt: float) -> BasePose:
    """Forward-Euler unicycle step."""
    dt = _check_dt(dt)
    v, omega = float(v), float(omega)
    if not (math.isfinite(v) and math.isfinite(omega)):
        raise DomainError(f"non-finite base command v={v} omega={omega}")
    return BasePose(
        pose.x + v * math.cos(pose.theta) * dt,
        pose.y + v * math.sin(pose.theta) * dt,
        pose.theta + omega * dt,
    )


def step_ee(p, pdot, dt: float) -> Vec3:
    dt = _check_dt(dt)
    p = np.asarray(p, dtype=float)
    pdot = np.asarray(pdot, dtype=float)
    return _vec3(p + pdot * dt)


def step_state(state: WholeBodyState, u: ControlInput, dt: float) -> WholeBodyState:
    return WholeBodyState(
        step_base(state.base, u.v, u.omega, dt),
        step_ee(state.p_left, u.pdot_left, dt),
        step_ee(state.p_right, u.pdot_right, dt),
    )


def rollout(x0: WholeBodyState, controls: Sequence[ControlInput], dt: float) -> list[WholeBodyState]:
    if len(controls) == 0:
        raise ConfigurationError("rollout needs at least one control")
    states = [x0]
    for u in controls:
        states.append(step_state(states[-1], u, dt))
    return states


def rollout_array(x0: np.ndarray, controls: np.ndarray, dt: float) -> np.ndarray:
    """Array twin of :func:`rollout`: (9,) and (N, 8) in, (N+1, 9) out.

    Uses the same scalar arithmetic as the typed path so both agree bitwise.
    """
    n = controls.shape[0]
    traj = np.empty((n + 1, STATE_DIM))
    traj[0] = x0
    for k in range(n):
        x, y, th = traj[k, 0], traj[k, 1], traj[k, 2]
        v, om = controls[k, 0], controls[k, 1]
        traj[k + 1, 0] = x + v * math.cos(th) * dt
        traj[k + 1, 1] = y + v * math.sin(th) * dt
        traj[k + 1, 2] = wrap_angle(th + om * dt)
        traj[k + 1, 3:] = traj[k, 3:] + controls[k, 2:] * dt
    return traj


def controls_to_array(controls: Sequence[ControlInput]) -> np.ndarray:
    return np.array([u.flatten() for u in controls]).reshape(len(controls), CONTROL_DIM)


def controls_from_array(a: np.ndarray) -> list[ControlInput]:
    a = np.asarray(a, dtype=float).reshape(-1, CONTROL_DIM)
    return [ControlInput.from_array(row) for row in a]


def states_from_array(a: np.ndarray) -> list[WholeBodyState]:
    return [WholeBodyState.from_array(row) for row in np.asarray(a, dtype=float)]


def ee_world(pose: BasePose, p) -> np.ndarray:
    """Base-frame end-effector position expressed in the world frame."""
    p = np.asarray(p, dtype=float)
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    return np.array([pose.x + c * p[0] - s * p[1], pose.y + s * p[0] + c * p[1], p[2]])


def world_to_base(pose: BasePose, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    dx, dy = w[0] - pose.x, w[1] - pose.y
    return np.array([c * dx + s * dy, -s * dx + c * dy, w[2]])
