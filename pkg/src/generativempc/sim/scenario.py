"""Scenario files.

A scenario is a YAML mapping::

    name: task1_human_aware
    task_type: navigate            # navigate | bimanual_reach | pick_place
    object_count: 0
    duration_limit: 120.0          # s
    start: {x: 0.0, y: 0.0, theta_deg: 0.0}
    goal:  {x: 3.0, y: 2.0, theta_deg: 0.0}
    arm_start: {left: [x, y, z], right: [x, y, z]}    # base frame, m
    arm_goals: {left: [x, y, z], right: [x, y, z]}    # defaults to arm_start
    obstacles:
      - {center: [2.6, 1.2], radius: 0.1}
    humans:
      - {position: [1.0, 1.25], radius: 0.3, is_mannequin: true}
      - {position: [2.0, 0.75], waypoints: [[2.3, 0.45]], speed: 0.05}
    hand_events:
      - {enter_time: 0.5, exit_time: 3.0, position: [0.45, -0.05, 0.15]}   # world frame
    mpc_weights: {w_hdg: 10.0}     # optional MpcWeights overrides
    success:                       # thresholds checked by evaluate_success
      max_position_error: 0.010
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from ..dynamics import BasePose
from ..errors import ConfigurationError
from ..mpc.costs import MpcWeights, Obstacle
from ..semantics.retrieval import TaskType
from ..utils.constants import HUMAN_RADIUS

DEFAULT_ARM_START = {"left": (0.30, 0.18, 0.05), "right": (0.30, -0.18, 0.05)}

SUCCESS_KEYS = (
    "max_position_error",
    "max_heading_error_deg",
    "max_arm_error",
    "min_hand_distance",
    "min_clearance",
    "max_speed_near_human",
)


def _point(value, dim: int, what: str) -> tuple[float, ...]:
    try:
        a = np.asarray(value, dtype=float).reshape(-1)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{what}: expected {dim} numbers, got {value!r}") from None
    if a.shape != (dim,) or not np.all(np.isfinite(a)):
        raise ConfigurationError(f"{what}: expected {dim} finite numbers, got {value!r}")
    return tuple(float(v) for v in a)


@dataclass(frozen=True)
class Human:
    position: tuple[float, float]
    radius: float = HUMAN_RADIUS
    is_mannequin: bool = True
    waypoints: tuple[tuple[float, float], ...] = ()
    speed: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", _point(self.position, 2, "human position"))
        object.__setattr__(self, "waypoints", tuple(_point(w, 2, "human waypoint") for w in self.waypoints))
        if not self.radius > 0:
            raise ConfigurationError(f"human radius must be > 0, got {self.radius}")
        if self.waypoints and not self.speed > 0:
            raise ConfigurationError("a walking human needs speed > 0")

    def position_at(self, t: float) -> tuple[float, float]:
        """Walk the waypoint polyline once at constant speed, then stand still."""
        if not self.waypoints:
            return self.position
        remaining = self.speed * max(t, 0.0)
        here = np.array(self.position)
        for wp in self.waypoints:
            target = np.array(wp)
            leg = float(np.linalg.norm(target - here))
            if remaining <= leg:
                if leg == 0.0:
                    break
                p = here + (target - here) * (remaining / leg)
                return (float(p[0]), float(p[1]))
            remaining -= leg
            here = target
        return (float(here[0]), float(here[1]))

    def disc_at(self, t: float) -> Obstacle:
        return Obstacle(self.position_at(t), self.radius)


@dataclass(frozen=True)
class HandEvent:
    enter_time: float
    exit_time: float
    position: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "position", _point(self.position, 3, "hand position"))
        if not (0 <= self.enter_time < self.exit_time):
            raise ConfigurationError(
                f"hand event needs 0 <= enter_time < exit_time, got {self.enter_time}..{self.exit_time}"
            )

    def active(self, t: float) -> bool:
        return self.enter_time <= t < self.exit_time


@dataclass(frozen=True)
class Scenario:
    name: str
    start: BasePose
    goal: BasePose
    arm_start: dict
    arm_goals: dict
    task_type: TaskType = TaskType.NAVIGATE
    object_count: int = 0
    obstacles: tuple[Obstacle, ...] = ()
    humans: tuple[Human, ...] = ()
    hand_events: tuple[HandEvent, ...] = ()
    duration_limit: float = 60.0
    mpc_weights: dict = field(default_factory=dict)
    success: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.duration_limit > 0:
            raise ConfigurationError(f"scenario '{self.name}': duration_limit must be > 0")
        task = TaskType(self.task_type)
        object.__setattr__(self, "task_type", task)
        if task is TaskType.NAVIGATE and (self.start.x, self.start.y) == (self.goal.x, self.goal.y):
            raise ConfigurationError(f"scenario '{self.name}': navigation start and goal coincide")
        for label in ("arm_start", "arm_goals"):
            sides = getattr(self, label)
            if set(sides) != {"left", "right"}:
                raise ConfigurationError(f"scenario '{self.name}': {label} needs 'left' and 'right'")
            object.__setattr__(
                self, label, {side: _point(sides[side], 3, f"{label}.{side}") for side in ("left", "right")}
            )
        unknown = sorted(set(self.success) - set(SUCCESS_KEYS))
        if unknown:
            raise ConfigurationError(f"scenario '{self.name}': unknown success threshold(s) {', '.join(unknown)}")
        MpcWeights.with_overrides(self.mpc_weights)
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "humans", tuple(self.humans))
        object.__setattr__(self, "hand_events", tuple(sorted(self.hand_events, key=lambda e: e.enter_time)))

    def hand_at(self, t: float) -> Optional[HandEvent]:
        for event in self.hand_events:
            if event.active(t):
                return event
        return None

    def hand_pending(self, t: float) -> bool:
        return any(event.exit_time > t for event in self.hand_events)

    def obstacles_at(self, t: float) -> tuple[Obstacle, ...]:
        """Static obstacles plus every human disc at its current position."""
        return self.obstacles + tuple(h.disc_at(t) for h in self.humans)


def _pose(data, what: str) -> BasePose:
    if not isinstance(data, dict):
        raise ConfigurationError(f"{what}: expected a mapping with x, y, theta_deg")
    try:
        return BasePose(float(data["x"]), float(data["y"]), math.radians(float(data.get("theta_deg", 0.0))))
    except KeyError as exc:
        raise ConfigurationError(f"{what}: missing {exc}") from None


def scenario_from_dict(
    data: dict, default_name: str = "scenario", human_radius: float = HUMAN_RADIUS
) -> Scenario:
    """Build a scenario; humans without a ``radius`` get ``human_radius``."""
    if not isinstance(data, dict):
        raise ConfigurationError("scenario file must contain a mapping")
    arm_start = data.get("arm_start") or DEFAULT_ARM_START
    try:
        return Scenario(
            name=str(data.get("name", default_name)),
            start=_pose(data.get("start"), "start"),
            goal=_pose(data.get("goal", data.get("start")), "goal"),
            arm_start=arm_start,
            arm_goals=data.get("arm_goals") or arm_start,
            task_type=data.get("task_type", "navigate"),
            object_count=int(data.get("object_count", 0)),
            obstacles=tuple(
                Obstacle(tuple(o["center"]), float(o.get("radius", 0.0))) for o in data.get("obstacles") or ()
            ),
            humans=tuple(
                Human(
                    position=h["position"],
                    radius=float(h.get("radius", human_radius)),
                    is_mannequin=bool(h.get("is_mannequin", True)),
                    waypoints=tuple(h.get("waypoints") or ()),
                    speed=float(h.get("speed", 0.0)),
                )
                for h in data.get("humans") or ()
            ),
            hand_events=tuple(
                HandEvent(float(e["enter_time"]), float(e["exit_time"]), e["position"])
                for e in data.get("hand_events") or ()
            ),
            duration_limit=float(data.get("duration_limit", 60.0)),
            mpc_weights=dict(data.get("mpc_weights") or {}),
            success=dict(data.get("success") or {}),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"invalid scenario: {exc!r}") from None
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid scenario: {exc}") from None


def load_scenario(path: Path, human_radius: float = HUMAN_RADIUS) -> Scenario:
    path = Path(path)
    with path.open("r", encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{path}: not valid YAML ({exc})") from None
    return scenario_from_dict(data, default_name=path.stem, human_radius=human_radius)
