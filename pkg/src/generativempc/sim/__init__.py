from .engine import Simulator, build_scene, detect_human_proximity, episode_from_run, run_scenario
from .metrics import RunLog, RunMetrics, TickRecord, compute_metrics, evaluate_success
from .scenario import HandEvent, Human, Scenario, load_scenario, scenario_from_dict

__all__ = [
    "HandEvent",
    "Human",
    "RunLog",
    "RunMetrics",
    "Scenario",
    "Simulator",
    "TickRecord",
    "build_scene",
    "compute_metrics",
    "detect_human_proximity",
    "episode_from_run",
    "evaluate_success",
    "load_scenario",
    "run_scenario",
    "scenario_from_dict",
]
