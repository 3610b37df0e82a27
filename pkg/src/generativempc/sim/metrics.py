from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Optional

from ..errors import ConfigurationError
from ..semantics.retrieval import ControlProfile, SceneDescription
from ..utils.constants import PLATFORM_V_MAX

SINGULARITY_THRESHOLD = 1e-3


@dataclass(frozen=True)
class TickRecord:
    """One 50 Hz control tick. Field order is the CSV column order."""

    t: float
    x: float
    y: float
    theta: float
    left_x: float
    left_y: float
    left_z: float
    right_x: float
    right_y: float
    right_z: float
    v: float
    omega: float
    left_vx: float
    left_vy: float
    left_vz: float
    right_vx: float
    right_vy: float
    right_vz: float
    profile: str
    human_near: bool
    human_distance: float
    hand_active: bool
    hand_distance: float
    clearance: float
    position_error: float
    heading_error: float
    left_error: float
    right_error: float
    sigma_min: float
    solved: bool
    converged: bool


TICK_COLUMNS = tuple(f.name for f in fields(TickRecord))


@dataclass
class RunLog:
    scenario: str
    ticks: list[TickRecord] = field(default_factory=list)
    nominal_v_max: float = PLATFORM_V_MAX
    position_tolerance: float = 0.010
    final_scene: Optional[SceneDescription] = None
    final_profile: Optional[ControlProfile] = None

    def __len__(self) -> int:
        return len(self.ticks)


@dataclass(frozen=True)
class RunMetrics:
    scenario: str
    ticks: int
    duration: float
    final_x: float
    final_y: float
    position_error: float
    heading_error: float
    left_arm_error: float
    right_arm_error: float
    arm_error: float
    navigation_time: Optional[float]
    min_clearance: float
    min_hand_distance: float
    max_speed_near_human: Optional[float]
    speed_reduction: Optional[float]
    profile_restore_time: Optional[float]
    profile_switches: int
    singularity_events: int
    solves: int
    converged_fraction: Optional[float]

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _restore_time(ticks: list[TickRecord]) -> Optional[float]:
    """Time from the end of the last hazard interval until the pre-hazard profile is back."""
    hazard = [tk.human_near or tk.hand_active for tk in ticks]
    if not any(hazard) or hazard[-1]:
        return None
    last = max(i for i, h in enumerate(hazard) if h)
    first = last
    while first > 0 and hazard[first - 1]:
        first -= 1
    if first == 0:
        return None
    before = ticks[first - 1].profile
    clear_at = ticks[last + 1].t
    for tk in ticks[last + 1:]:
        if tk.profile == before:
            return tk.t - clear_at
    return math.inf


def compute_metrics(log: RunLog) -> RunMetrics:
    ticks = log.ticks
    if not ticks:
        raise ConfigurationError(f"run log '{log.scenario}' has no ticks")
    final = ticks[-1]

    nav_time = next((tk.t for tk in ticks if tk.position_error <= log.position_tolerance), None)
    near = [abs(tk.v) for tk in ticks if tk.human_near]
    max_near = max(near) if near else None
    reduction = 1.0 - max_near / log.nominal_v_max if near else None
    hand = [tk.hand_distance for tk in ticks if tk.hand_active]
    solved = [tk for tk in ticks if tk.solved]
    switches = sum(1 for a, b in zip(ticks, ticks[1:]) if a.profile != b.profile)

    return RunMetrics(
        scenario=log.scenario,
        ticks=len(ticks),
        duration=final.t,
        final_x=final.x,
        final_y=final.y,
        position_error=final.position_error,
        heading_error=final.heading_error,
        left_arm_error=final.left_error,
        right_arm_error=final.right_error,
        arm_error=max(final.left_error, final.right_error),
        navigation_time=nav_time,
        min_clearance=min(tk.clearance for tk in ticks),
        min_hand_distance=min(hand) if hand else math.inf,
        max_speed_near_human=max_near,
        speed_reduction=reduction,
        profile_restore_time=_restore_time(ticks),
        profile_switches=switches,
        singularity_events=sum(1 for tk in ticks if tk.sigma_min < SINGULARITY_THRESHOLD),
        solves=len(solved),
        converged_fraction=(sum(1 for tk in solved if tk.converged) / len(solved)) if solved else None,
    )


def evaluate_success(metrics: RunMetrics, thresholds: dict) -> tuple[bool, list[str]]:
    """Check declared thresholds; returns (ok, failed check descriptions)."""
    failed: list[str] = []

    def at_most(name: str, value: Optional[float], limit: float) -> None:
        if value is not None and not value <= limit + 1e-12:
            failed.append(f"{name} {value:.6g} > {limit:.6g}")

    def at_least(name: str, value: float, limit: float) -> None:
        if not value >= limit:
            failed.append(f"{name} {value:.6g} < {limit:.6g}")

    for key, limit in thresholds.items():
        limit = float(limit)
        if key == "max_position_error":
            at_most("position_error", metrics.position_error, limit)
        elif key == "max_heading_error_deg":
            at_most("heading_error_deg", math.degrees(metrics.heading_error), limit)
        elif key == "max_arm_error":
            at_most("arm_error", metrics.arm_error, limit)
        elif key == "min_hand_distance":
            at_least("min_hand_distance", metrics.min_hand_distance, limit)
        elif key == "min_clearance":
            at_least("min_clearance", metrics.min_clearance, limit)
        elif key == "max_speed_near_human":
            at_most("max_speed_near_human", metrics.max_speed_near_human, limit)
        else:
            raise ConfigurationError(f"unknown success threshold '{key}'")
    return not failed, failed
