"""The five demonstration episodes every new store starts from."""
from __future__ import annotations

import math

from ..compliance.controller import ComplianceGains, gains_from_preset
from ..config import preset_pair
from ..utils.constants import PLATFORM_OMEGA_MAX, PLATFORM_PDOT_MAX, PLATFORM_V_MAX
from .retrieval import (
    ControlProfile,
    Episode,
    EpisodeOutcome,
    EpisodeStore,
    SceneDescription,
    TaskType,
)

CONSERVATIVE_V_MAX = 0.10
CONSERVATIVE_OMEGA_MAX = 1.0
HAND_D_SAFE = 0.15
EE_D_SAFE = 0.08

# Compliant values retrieved for hazards; identical for every preset.
HUMAN_BASE_GAINS = ComplianceGains(K_i=8.0, D_i=25.0, K_a=15.5, D_a=35.0, k_theta=7.5)
HAND_ARM_GAINS = ComplianceGains(K_i=8.0, D_i=25.0, K_a=15.0, D_a=30.0)

SEED_NAMES = (
    "free-navigation",
    "human-proximate-navigation",
    "bimanual-reach",
    "bimanual-reach-hand",
    "pick-place",
)


def seed_store(preset: str = "sim") -> EpisodeStore:
    pair = preset_pair(preset)
    base = gains_from_preset(pair["base"])
    arms = gains_from_preset(pair["arms"])
    arm_speed = pair["arm_speed"]
    done = EpisodeOutcome(final_position_error=0.0078, final_heading_error=math.radians(1.4), success=True)
    reached = EpisodeOutcome(final_position_error=0.0, final_heading_error=0.0, success=True)

    episodes = [
        Episode(
            SEED_NAMES[0],
            SceneDescription(TaskType.NAVIGATE, free_space=True),
            ControlProfile(SEED_NAMES[0], PLATFORM_V_MAX, PLATFORM_OMEGA_MAX, PLATFORM_PDOT_MAX, EE_D_SAFE, base, arms),
            done,
        ),
        Episode(
            SEED_NAMES[1],
            SceneDescription(TaskType.NAVIGATE, human_present=True, human_distance=1.0),
            ControlProfile(
                SEED_NAMES[1], CONSERVATIVE_V_MAX, CONSERVATIVE_OMEGA_MAX, PLATFORM_PDOT_MAX, EE_D_SAFE,
                HUMAN_BASE_GAINS, arms,
            ),
            done,
        ),
        Episode(
            SEED_NAMES[2],
            SceneDescription(TaskType.BIMANUAL_REACH, object_count=1, free_space=True),
            ControlProfile(SEED_NAMES[2], PLATFORM_V_MAX, PLATFORM_OMEGA_MAX, arm_speed, EE_D_SAFE, base, arms),
            reached,
        ),
        Episode(
            SEED_NAMES[3],
            SceneDescription(
                TaskType.BIMANUAL_REACH, human_present=True, human_distance=0.5, hand_in_workspace=True, object_count=1
            ),
            ControlProfile(
                SEED_NAMES[3], CONSERVATIVE_V_MAX, CONSERVATIVE_OMEGA_MAX, 0.05, HAND_D_SAFE, base, HAND_ARM_GAINS
            ),
            reached,
        ),
        Episode(
            SEED_NAMES[4],
            SceneDescription(TaskType.PICK_PLACE, object_count=2, free_space=True),
            ControlProfile(SEED_NAMES[4], PLATFORM_V_MAX, PLATFORM_OMEGA_MAX, arm_speed, EE_D_SAFE, base, arms),
            reached,
        ),
    ]
    return EpisodeStore(episodes)
