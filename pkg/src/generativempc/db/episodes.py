"""Flat-file episode store: one JSON record per line.

Record layout (keys always in this order)::

    {"name": str,
     "scene": {"task_type", "human_present", "human_distance" (null = no human),
               "hand_in_workspace", "object_count", "free_space"},
     "profile": {"name", "v_max", "omega_max", "pdot_max", "d_safe",
                 "base_gains": {"K_i", "D_i", "K_a", "D_a", "k_theta"},
                 "arm_gains": {...}},
     "outcome": {"final_position_error", "final_heading_error", "success"},
     "embedding": [8 floats]}
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from ..config import Settings, data_root
from ..errors import ConfigurationError
from ..semantics.retrieval import (
    ControlProfile,
    Episode,
    EpisodeOutcome,
    EpisodeStore,
    SceneDescription,
)

STORE_FILE = "episodes-{preset}.jsonl"

# Mutable override (set from the CLI --store flag)
_STORE_PATH_OVERRIDE: Optional[Path] = None


def set_store_path(path: Path | None) -> None:
    global _STORE_PATH_OVERRIDE
    _STORE_PATH_OVERRIDE = Path(path) if path is not None else None


def store_path(preset: str = "sim") -> Path:
    if _STORE_PATH_OVERRIDE:
        return _STORE_PATH_OVERRIDE
    try:
        configured = Settings.load().store_path
        if configured:
            return Path(configured)
    except Exception:
        pass
    return data_root() / STORE_FILE.format(preset=preset)


def episode_to_record(episode: Episode) -> dict:
    return {
        "name": episode.name,
        "scene": episode.scene.to_dict(),
        "profile": episode.profile.to_dict(),
        "outcome": episode.outcome.to_dict(),
        "embedding": list(episode.embedding),
    }


def record_to_episode(record: dict) -> Episode:
    return Episode(
        name=record["name"],
        scene=SceneDescription.from_dict(record["scene"]),
        profile=ControlProfile.from_dict(record["profile"]),
        outcome=EpisodeOutcome(**record["outcome"]),
        embedding=tuple(record["embedding"]),
    )


def dumps_store(store: EpisodeStore) -> str:
    lines = [json.dumps(episode_to_record(ep), allow_nan=False) for ep in store.snapshot()]
    return "".join(line + "\n" for line in lines)


def save_store(store: EpisodeStore, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        f.write(dumps_store(store))
    return path


def load_store(path: Path) -> EpisodeStore:
    path = Path(path)
    episodes = []
    with path.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                episodes.append(record_to_episode(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigurationError(f"{path}:{lineno}: malformed episode record ({exc})") from exc
    return EpisodeStore(episodes, path=path)
