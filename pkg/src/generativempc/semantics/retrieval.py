"""Scene embedding and experience retrieval.

Scenes are structured descriptions rather than images or text; their embedding is a
fixed 8-dimensional feature vector:

    [navigate, bimanual_reach, pick_place,          one-hot task type
     human_present, clamp(1 - d_human / 3, 0, 1),
     hand_in_workspace, object_count / 10, free_space]
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from ..compliance.controller import ComplianceGains
from ..errors import ConfigurationError, RetrievalError, SimilarityError
from ..mpc.costs import MotionLimits
from ..utils.constants import OBJECT_SCALE, PLATFORM_V_MAX, PROXIMITY_RANGE, TASK_TYPES
from ..utils.logging import get_logger

logger = get_logger()

EMBEDDING_DIM = len(TASK_TYPES) + 5


class TaskType(str, Enum):
    NAVIGATE = "navigate"
    BIMANUAL_REACH = "bimanual_reach"
    PICK_PLACE = "pick_place"


@dataclass(frozen=True)
class SceneDescription:
    task_type: TaskType
    human_present: bool = False
    human_distance: float = math.inf
    hand_in_workspace: bool = False
    object_count: int = 0
    free_space: bool = False

    def __post_init__(self):
        try:
            object.__setattr__(self, "task_type", TaskType(self.task_type))
        except ValueError:
            raise ConfigurationError(f"unknown task type '{self.task_type}'") from None
        distance = math.inf if self.human_distance is None else float(self.human_distance)
        object.__setattr__(self, "human_distance", distance)
        object.__setattr__(self, "human_present", bool(self.human_present))
        object.__setattr__(self, "hand_in_workspace", bool(self.hand_in_workspace))
        object.__setattr__(self, "free_space", bool(self.free_space))
        if self.human_present and not distance > 0:
            raise ConfigurationError(f"human_distance must be > 0 when a human is present, got {distance}")
        if int(self.object_count) != self.object_count or self.object_count < 0:
            raise ConfigurationError(f"object_count must be a non-negative integer, got {self.object_count}")
        object.__setattr__(self, "object_count", int(self.object_count))

    def to_dict(self) -> dict:
        return {
            "task_type": self.task_type.value,
            "human_present": self.human_present,
            "human_distance": None if math.isinf(self.human_distance) else self.human_distance,
            "hand_in_workspace": self.hand_in_workspace,
            "object_count": self.object_count,
            "free_space": self.free_space,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SceneDescription":
        return cls(**data)


@dataclass(frozen=True)
class ControlProfile:
    name: str
    v_max: float
    omega_max: float
    pdot_max: float
    d_safe: float
    base_gains: ComplianceGains
    arm_gains: ComplianceGains

    def __post_init__(self):
        for attr in ("v_max", "omega_max", "pdot_max", "d_safe"):
            value = float(getattr(self, attr))
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"profile '{self.name}': {attr} must be > 0, got {value}")
            object.__setattr__(self, attr, value)
        if self.v_max > PLATFORM_V_MAX:
            raise ConfigurationError(
                f"profile '{self.name}': v_max {self.v_max} exceeds the platform cap {PLATFORM_V_MAX}"
            )
        for label, gains in (("base", self.base_gains), ("arm", self.arm_gains)):
            if not gains.D_a > 0:
                raise ConfigurationError(f"profile '{self.name}': {label} D_a must be > 0")

    @property
    def limits(self) -> MotionLimits:
        return MotionLimits(self.v_max, self.omega_max, self.pdot_max)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "v_max": self.v_max,
            "omega_max": self.omega_max,
            "pdot_max": self.pdot_max,
            "d_safe": self.d_safe,
            "base_gains": self.base_gains.as_dict(),
            "arm_gains": self.arm_gains.as_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ControlProfile":
        data = dict(data)
        data["base_gains"] = ComplianceGains(**data["base_gains"])
        data["arm_gains"] = ComplianceGains(**data["arm_gains"])
        return cls(**data)


@dataclass(frozen=True)
class EpisodeOutcome:
    final_position_error: float
    final_heading_error: float
    success: bool

    def to_dict(self) -> dict:
        return {
            "final_position_error": self.final_position_error,
            "final_heading_error": self.final_heading_error,
            "success": self.success,
        }


@dataclass(frozen=True)
class Episode:
    name: str
    scene: SceneDescription
    profile: ControlProfile
    outcome: EpisodeOutcome
    embedding: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        computed = tuple(float(v) for v in embed_scene(self.scene))
        if self.embedding is None:
            object.__setattr__(self, "embedding", computed)
        elif tuple(float(v) for v in self.embedding) != computed:
            raise ConfigurationError(f"episode '{self.name}': stored embedding does not match its scene")
        else:
            object.__setattr__(self, "embedding", computed)


@dataclass
class EpisodeStore:
    """Ordered, append-only episode collection; insertion order breaks retrieval ties."""

    episodes: list[Episode] = field(default_factory=list)
    path: Optional[Path] = None

    def __post_init__(self):
        self.episodes = list(self.episodes)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.episodes)

    def __iter__(self) -> Iterator[Episode]:
        return iter(self.snapshot())

    def snapshot(self) -> tuple[Episode, ...]:
        return tuple(self.episodes)

    def append(self, episode: Episode) -> None:
        with self._lock:
            self.episodes = self.episodes + [episode]


def embed_scene(scene: SceneDescription) -> np.ndarray:
    one_hot = [1.0 if scene.task_type.value == t else 0.0 for t in TASK_TYPES]
    proximity = min(max(1.0 - scene.human_distance / PROXIMITY_RANGE, 0.0), 1.0)
    features = [
        float(scene.human_present),
        proximity,
        float(scene.hand_in_workspace),
        scene.object_count / OBJECT_SCALE,
        float(scene.free_space),
    ]
    return np.array(one_hot + features)


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise SimilarityError(f"dimension mismatch: {a.size} vs {b.size}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise SimilarityError("cosine similarity is undefined for a zero vector")
    return float(np.clip(float(a @ b) / (na * nb), -1.0, 1.0))


def retrieve_episode(scene_or_embedding, store: EpisodeStore) -> tuple[Episode, float]:
    """Best successful episode by cosine similarity; earliest insertion wins ties."""
    if isinstance(scene_or_embedding, SceneDescription):
        query = embed_scene(scene_or_embedding)
    else:
        query = np.asarray(scene_or_embedding, dtype=float)
    episodes = store.snapshot()
    if not episodes:
        raise RetrievalError("episode store is empty; seed it first")
    best: Optional[Episode] = None
    best_sim = -math.inf
    for episode in episodes:
        if not episode.outcome.success:
            continue
        sim = cosine_similarity(query, episode.embedding)
        if sim > best_sim:
            best, best_sim = episode, sim
    if best is None:
        raise RetrievalError("episode store holds no successful episode")
    return best, best_sim


def retrieve_profile(scene, store: EpisodeStore) -> tuple[ControlProfile, float]:
    episode, sim = retrieve_episode(scene, store)
    return episode.profile, sim


def record_episode(store: EpisodeStore, episode: Episode, path: Optional[Path] = None) -> EpisodeStore:
    """Append and persist (to ``path`` or the store's own path, when either is set)."""
    from ..db import episodes as episode_db

    store.append(episode)
    target = path or store.path
    if target is not None:
        episode_db.save_store(store, target)
        logger.info(f"Recorded episode '{episode.name}' (store size {len(store)}) -> {target}")
    return store
