"""Impedance-admittance tracking shared by the base and both arms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..config import GAIN_PRESETS
from ..dynamics import BasePose, DriveGeometry, wrap_angle
from ..errors import ConfigurationError
from ..utils.constants import BLEND_RADIUS, COINCIDENT_EPS


@dataclass(frozen=True)
class ComplianceGains:
    K_i: float
    D_i: float
    K_a: float
    D_a: float
    k_theta: float = 0.0

    def __post_init__(self):
        for name in ("K_i", "D_i", "K_a", "D_a", "k_theta"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value >= 0):
                raise ConfigurationError(f"gain {name} must be finite and >= 0, got {value}")
            object.__setattr__(self, name, value)

    def as_dict(self) -> dict:
        return {"K_i": self.K_i, "D_i": self.D_i, "K_a": self.K_a, "D_a": self.D_a, "k_theta": self.k_theta}


def gains_from_preset(name: str) -> ComplianceGains:
    try:
        values = GAIN_PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(GAIN_PRESETS))
        raise ConfigurationError(f"unknown gain preset '{name}' (known: {known})") from None
    return ComplianceGains(**values)


@dataclass(frozen=True)
class AdmittanceState:
    x_c: tuple[float, ...]
    xdot_c: tuple[float, ...]

    def __post_init__(self):
        x = np.asarray(self.x_c, dtype=float).reshape(-1)
        xd = np.asarray(self.xdot_c, dtype=float).reshape(-1)
        if x.shape != xd.shape:
            raise ConfigurationError("admittance position and velocity must have the same dimension")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xd))):
            raise ConfigurationError("admittance state must be finite")
        object.__setattr__(self, "x_c", tuple(float(v) for v in x))
        object.__setattr__(self, "xdot_c", tuple(float(v) for v in xd))

    @classmethod
    def at(cls, x_d, xdot_d=None) -> "AdmittanceState":
        """State reset onto a reference (used on activation)."""
        x_d = np.asarray(x_d, dtype=float)
        xdot_d = np.zeros_like(x_d) if xdot_d is None else np.asarray(xdot_d, dtype=float)
        return cls(tuple(x_d), tuple(xdot_d))

    @property
    def position(self) -> np.ndarray:
        return np.array(self.x_c)

    @property
    def velocity(self) -> np.ndarray:
        return np.array(self.xdot_c)


def virtual_force(x_d, xdot_d, x, xdot, gains: ComplianceGains) -> np.ndarray:
    """F = D_i (xdot_d - xdot) + K_i (x_d - x)."""
    x_d, xdot_d = np.asarray(x_d, dtype=float), np.asarray(xdot_d, dtype=float)
    x, xdot = np.asarray(x, dtype=float), np.asarray(xdot, dtype=float)
    return gains.D_i * (xdot_d - xdot) + gains.K_i * (x_d - x)


def admittance_update(
    state: AdmittanceState, x_d, xdot_d, F_virt, gains: ComplianceGains, dt: float
) -> AdmittanceState:
    """xdot_c = xdot_d + (F - K_a (x_c - x_d)) / D_a, then x_c += xdot_c dt."""
    if not gains.D_a > 0:
        raise ConfigurationError(f"admittance damping D_a must be > 0, got {gains.D_a}")
    x_d, xdot_d = np.asarray(x_d, dtype=float), np.asarray(xdot_d, dtype=float)
    x_c = state.position
    xdot_c = xdot_d + (np.asarray(F_virt, dtype=float) - gains.K_a * (x_c - x_d)) / gains.D_a
    return AdmittanceState(tuple(x_c + xdot_c * dt), tuple(xdot_c))


def blended_heading(theta_d: float, theta_goal: float, goal_distance: float) -> float:
    beta = min(max(goal_distance / BLEND_RADIUS, 0.0), 1.0)
    return wrap_angle(theta_goal + beta * wrap_angle(theta_d - theta_goal))


def base_command(
    pose: BasePose,
    theta_d: float,
    admittance: AdmittanceState,
    gains: ComplianceGains,
    goal_distance: float,
    theta_goal: float | None = None,
    omega_ff: float = 0.0,
) -> tuple[float, float]:
    """Body-frame projection of the corrected planar velocity plus heading regulation.

    Below BLEND_RADIUS from the goal the desired heading is interpolated from
    ``theta_d`` (direction of travel) towards ``theta_goal``. ``omega_ff`` is the
    planned turn rate; the heading loop only corrects around it.
    """
    xdot_c = admittance.velocity
    if xdot_c.shape != (2,):
        raise ConfigurationError("base admittance state must be planar")
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    v_c = c * xdot_c[0] + s * xdot_c[1]
    target = theta_d if theta_goal is None else blended_heading(theta_d, theta_goal, goal_distance)
    omega_c = float(omega_ff) + gains.k_theta * wrap_angle(target - pose.theta)
    return float(v_c), float(omega_c)


def wheel_speeds(v_c: float, omega_c: float, geom: DriveGeometry) -> tuple[float, float]:
    half = geom.wheelbase / 2.0
    return (v_c + half * omega_c) / geom.wheel_radius, (v_c - half * omega_c) / geom.wheel_radius


def body_twist(omega_R: float, omega_L: float, geom: DriveGeometry) -> tuple[float, float]:
    """Inverse of :func:`wheel_speeds`."""
    r = geom.wheel_radius
    return r * (omega_R + omega_L) / 2.0, r * (omega_R - omega_L) / geom.wheelbase


def separate_end_effectors(p_left_c, p_right_c, d_safe: float) -> tuple[np.ndarray, np.ndarray]:
    """Push both end-effector references apart symmetrically to at least d_safe."""
    if not d_safe > 0:
        raise ConfigurationError(f"d_safe must be > 0, got {d_safe}")
    pl = np.asarray(p_left_c, dtype=float)
    pr = np.asarray(p_right_c, dtype=float)
    delta = pl - pr
    dist = float(np.linalg.norm(delta))
    if dist >= d_safe:
        return pl.copy(), pr.copy()
    mid = 0.5 * (pl + pr)
    if dist < COINCIDENT_EPS:
        # left arm is mounted on +y
        axis = np.array([0.0, 1.0, 0.0])
    else:
        axis = delta / dist
    half = 0.5 * d_safe * axis
    return mid + half, mid - half


def project_outside_sphere(p, center, radius: float) -> np.ndarray:
    """Closest point to ``p`` outside the sphere (identity when already outside)."""
    p = np.asarray(p, dtype=float)
    center = np.asarray(center, dtype=float)
    delta = p - center
    dist = float(np.linalg.norm(delta))
    if dist >= radius:
        return p.copy()
    if dist < COINCIDENT_EPS:
        return center + np.array([0.0, 0.0, radius])
    return center + delta * (radius / dist)
