"""Whole-body MPC cost: terminal, running, obstacle (APF), control effort and smoothness.

Every term is evaluated on the array forms from :mod:`generativempc.dynamics`. The
typed operations and :func:`cost_and_gradient` share the same term functions and the
same summation order, so ``total_cost(controls)`` and the solver objective agree bitwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from typing import Sequence

import numpy as np

from ..dynamics import (
    CONTROL_DIM,
    STATE_DIM,
    BasePose,
    ControlInput,
    WholeBodyState,
    controls_to_array,
    rollout_array,
    wrap_angle,
)
from ..errors import ConfigurationError
from ..utils.constants import (
    GOAL_FADE_RADIUS,
    HEADING_SWITCH_RADIUS,
    PLATFORM_OMEGA_MAX,
    PLATFORM_PDOT_MAX,
    PLATFORM_V_MAX,
    RHO_MIN,
)


@dataclass(frozen=True)
class MpcWeights:
    w_p: float = 5000.0
    w_theta: float = 25.0
    w_arm: float = 200.0
    w_path: float = 8.0
    w_hdg: float = 10.0
    w_v: float = 1.0
    w_omega: float = 1.0
    w_pdot: float = 1.0
    w_dv: float = 5.0
    w_domega: float = 5.0
    w_dpdot: float = 5.0
    eta: float = 50.0
    rho0: float = 0.5

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value >= 0):
                raise ConfigurationError(f"weight {f.name} must be finite and >= 0, got {value}")
        if not self.rho0 > 0:
            raise ConfigurationError(f"rho0 must be > 0, got {self.rho0}")

    @classmethod
    def with_overrides(cls, overrides: dict | None = None) -> "MpcWeights":
        overrides = dict(overrides or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigurationError(f"unknown MPC weight(s): {', '.join(unknown)}")
        return cls(**{k: float(v) for k, v in overrides.items()})

    @property
    def effort(self) -> np.ndarray:
        return np.array([self.w_v, self.w_omega] + [self.w_pdot] * 6)

    @property
    def smoothness(self) -> np.ndarray:
        return np.array([self.w_dv, self.w_domega] + [self.w_dpdot] * 6)


@dataclass(frozen=True)
class MotionLimits:
    v_max: float = PLATFORM_V_MAX
    omega_max: float = PLATFORM_OMEGA_MAX
    pdot_max: float = PLATFORM_PDOT_MAX

    def __post_init__(self):
        for name in ("v_max", "omega_max", "pdot_max"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"limit {name} must be > 0, got {value}")

    def upper(self) -> np.ndarray:
        return np.array([self.v_max, self.omega_max] + [self.pdot_max] * 6)


@dataclass(frozen=True)
class Obstacle:
    center: tuple[float, float]
    radius: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        if c.shape != (2,):
            raise ConfigurationError(f"obstacle center must be a 2-vector, got {self.center!r}")
        object.__setattr__(self, "center", (float(c[0]), float(c[1])))
        if not (math.isfinite(self.radius) and self.radius >= 0):
            raise ConfigurationError(f"obstacle radius must be >= 0, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    def clearance(self, xy) -> float:
        """Distance from a planar point to the obstacle surface (negative inside)."""
        return math.hypot(xy[0] - self.center[0], xy[1] - self.center[1]) - self.radius


@dataclass(frozen=True)
class MpcProblem:
    x0: WholeBodyState
    goal_base: BasePose
    goal_left: tuple[float, float, float]
    goal_right: tuple[float, float, float]
    obstacles: tuple[Obstacle, ...] = ()
    weights: MpcWeights = field(default_factory=MpcWeights)
    limits: MotionLimits = field(default_factory=MotionLimits)
    N: int = 7
    dt: float = 0.15
    u_prev: ControlInput = field(default_factory=ControlInput)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ConfigurationError(f"horizon N must be an integer >= 1, got {self.N}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"dt must be > 0, got {self.dt}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "goal_left", tuple(float(c) for c in self.goal_left))
        object.__setattr__(self, "goal_right", tuple(float(c) for c in self.goal_right))

    def replace(self, **changes) -> "MpcProblem":
        return replace(self, **changes)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        ub = np.tile(self.limits.upper(), self.N)
        return -ub, ub

    @cached_property
    def packed(self) -> "_Packed":
        return _Packed(
            x0=self.x0.flatten(),
            goal_xy=np.array([self.goal_base.x, self.goal_base.y]),
            goal_theta=self.goal_base.theta,
            goal_left=np.array(self.goal_left),
            goal_right=np.array(self.goal_right),
            obstacles=[(np.array(o.center), o.radius) for o in self.obstacles],
            effort=self.weights.effort,
            smoothness=self.weights.smoothness,
            u_prev=self.u_prev.flatten(),
        )


@dataclass
class _Packed:
    x0: np.ndarray
    goal_xy: np.ndarray
    goal_theta: float
    goal_left: np.ndarray
    goal_right: np.ndarray
    obstacles: list
    effort: np.ndarray
    smoothness: np.ndarray
    u_prev: np.ndarray


def repulsive_potential(rho: float, eta: float, rho0: float) -> float:
    """Khatib repulsive potential; zero outside the influence radius, rho clamped at RHO_MIN."""
    if rho > rho0:
        return 0.0
    rho = max(rho, RHO_MIN)
    return 0.5 * eta * (1.0 / rho - 1.0 / rho0) ** 2


def goal_fade(distance: float) -> float:
    return min(1.0, distance / GOAL_FADE_RADIUS)


# -- term functions on arrays; grad arrays are filled in place when given ----------


def _terminal(xN: np.ndarray, problem: MpcProblem, gs: np.ndarray | None = None) -> float:
    P, w = problem.packed, problem.weights
    dp = xN[0:2] - P.goal_xy
    eth = wrap_angle(xN[2] - P.goal_theta)
    dl = xN[3:6] - P.goal_left
    dr = xN[6:9] - P.goal_right
    if gs is not None:
        gs[0:2] += 2.0 * w.w_p * dp
        gs[2] += 2.0 * w.w_theta * eth
        gs[3:6] += 2.0 * w.w_arm * dl
        gs[6:9] += 2.0 * w.w_arm * dr
    return float(w.w_p * (dp @ dp) + w.w_theta * eth * eth + w.w_arm * (dl @ dl + dr @ dr))


def _running(traj: np.ndarray, problem: MpcProblem, gs: np.ndarray | None = None) -> float:
    P, w = problem.packed, problem.weights
    n = traj.shape[0] - 1
    total = 0.0
    for k in range(1, n + 1):
        diff = traj[k, 0:2] - P.goal_xy
        d2 = float(diff @ diff)
        d = math.sqrt(d2)
        wk = w.w_path * k / n
        if d > HEADING_SWITCH_RADIUS:
            ref = math.atan2(-diff[1], -diff[0])
            e = wrap_angle(traj[k, 2] - ref)
        else:
            e = wrap_angle(traj[k, 2] - P.goal_theta)
        total += wk * d2 + w.w_hdg * e * e
        if gs is not None:
            gs[k, 0:2] += 2.0 * wk * diff
            gs[k, 2] += 2.0 * w.w_hdg * e
            if d > HEADING_SWITCH_RADIUS:
                gs[k, 0] += 2.0 * w.w_hdg * e * diff[1] / d2
                gs[k, 1] -= 2.0 * w.w_hdg * e * diff[0] / d2
    return total


def _obstacle(traj: np.ndarray, problem: MpcProblem, gs: np.ndarray | None = None) -> float:
    P, w = problem.packed, problem.weights
    if not P.obstacles:
        return 0.0
    total = 0.0
    for k in range(1, traj.shape[0]):
        p = traj[k, 0:2]
        to_goal = p - P.goal_xy
        dg = math.sqrt(float(to_goal @ to_goal))
        fade = goal_fade(dg)
        for center, radius in P.obstacles:
            rel = p - center
            dist = math.sqrt(float(rel @ rel))
            rho = dist - radius
            if rho > w.rho0:
                continue
            u = repulsive_potential(rho, w.eta, w.rho0)
            total += fade * u
            if gs is None:
                continue
            if rho >= RHO_MIN and dist > 0.0:
                dudrho = -w.eta * (1.0 / rho - 1.0 / w.rho0) / (rho * rho)
                gs[k, 0:2] += fade * dudrho * rel / dist
            if dg < GOAL_FADE_RADIUS and dg > 0.0:
                gs[k, 0:2] += u * to_goal / (dg * GOAL_FADE_RADIUS)
    return total


def _control(U: np.ndarray, problem: MpcProblem, gu: np.ndarray | None = None) -> float:
    W = problem.packed.effort
    if gu is not None:
        gu += 2.0 * W * U
    return float(np.sum(W * U * U))


def _smooth(U: np.ndarray, u_prev: np.ndarray, problem: MpcProblem, gu: np.ndarray | None = None) -> float:
    W = problem.packed.smoothness
    prev = np.vstack([u_prev[None, :], U[:-1]])
    D = U - prev
    if gu is not None:
        G = 2.0 * W * D
        gu += G
        gu[:-1] -= G[1:]
    return float(np.sum(W * D * D))


# -- typed operations ----------------------------------------------------------------


def _traj_array(trajectory) -> np.ndarray:
    if isinstance(trajectory, np.ndarray):
        return trajectory.reshape(-1, STATE_DIM)
    return np.array([s.flatten() for s in trajectory])


def _controls_array(controls) -> np.ndarray:
    if isinstance(controls, np.ndarray):
        return controls.reshape(-1, CONTROL_DIM)
    return controls_to_array(list(controls))


def terminal_cost(xN, problem: MpcProblem) -> float:
    x = xN.flatten() if isinstance(xN, WholeBodyState) else np.asarray(xN, dtype=float)
    return _terminal(x, problem)


def running_cost(trajectory, problem: MpcProblem) -> float:
    return _running(_traj_array(trajectory), problem)


def obstacle_cost(trajectory, problem: MpcProblem) -> float:
    return _obstacle(_traj_array(trajectory), problem)


def control_cost(controls, problem: MpcProblem) -> float:
    return _control(_controls_array(controls), problem)


def smoothness_cost(controls, u_prev: ControlInput, problem: MpcProblem) -> float:
    return _smooth(_controls_array(controls), u_prev.flatten(), problem)


def _check_controls(U: np.ndarray, problem: MpcProblem) -> np.ndarray:
    if U.shape != (problem.N, CONTROL_DIM):
        raise ConfigurationError(f"expected {problem.N} controls, got {U.shape[0]}")
    return U


def total_cost(controls, problem: MpcProblem) -> float:
    U = _check_controls(_controls_array(controls), problem)
    traj = rollout_array(problem.packed.x0, U, problem.dt)
    return (
        _terminal(traj[-1], problem)
        + _running(traj, problem)
        + _obstacle(traj, problem)
        + _control(U, problem)
        + _smooth(U, problem.packed.u_prev, problem)
    )


def cost_and_gradient(u_flat: np.ndarray, problem: MpcProblem) -> tuple[float, np.ndarray]:
    """Total cost and its exact gradient w.r.t. the flattened (8N,) control vector.

    State sensitivities are pulled back through the Euler dynamics with an adjoint
    sweep; the wrap in the heading update has unit derivative almost everywhere.
    """
    U = _check_controls(np.asarray(u_flat, dtype=float).reshape(-1, CONTROL_DIM), problem)
    n, dt = problem.N, problem.dt
    traj = rollout_array(problem.packed.x0, U, dt)

    gs = np.zeros((n + 1, STATE_DIM))
    gu = np.zeros((n, CONTROL_DIM))
    cost = (
        _terminal(traj[-1], problem, gs[n])
        + _running(traj, problem, gs)
        + _obstacle(traj, problem, gs)
        + _control(U, problem, gu)
        + _smooth(U, problem.packed.u_prev, problem, gu)
    )

    lam = gs[n].copy()
    for k in range(n - 1, -1, -1):
        th, v = traj[k, 2], U[k, 0]
        c, s = math.cos(th), math.sin(th)
        gu[k, 0] += (lam[0] * c + lam[1] * s) * dt
        gu[k, 1] += lam[2] * dt
        gu[k, 2:] += lam[3:] * dt
        nxt = gs[k].copy()
        nxt[0] += lam[0]
        nxt[1] += lam[1]
        nxt[2] += lam[2] + (lam[1] * v * c - lam[0] * v * s) * dt
        nxt[3:] += lam[3:]
        lam = nxt
    return cost, gu.reshape(-1)
