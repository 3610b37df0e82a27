from .retrieval import (
    ControlProfile,
    Episode,
    EpisodeOutcome,
    EpisodeStore,
    SceneDescription,
    TaskType,
    cosine_similarity,
    embed_scene,
    record_episode,
    retrieve_episode,
    retrieve_profile,
)
from .seeds import seed_store

__all__ = [
    "ControlProfile",
    "Episode",
    "EpisodeOutcome",
    "EpisodeStore",
    "SceneDescription",
    "TaskType",
    "cosine_similarity",
    "embed_scene",
    "record_episode",
    "retrieve_episode",
    "retrieve_profile",
    "seed_store",
]
