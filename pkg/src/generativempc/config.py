import json
import os
from pathlib import Path
from dataclasses import dataclass, asdict, field, fields

from .errors import ConfigurationError

APP_NAME = "GenerativeMPC"
HOME_ENV = "GENERATIVEMPC_HOME"


def data_root() -> Path:
    base = os.getenv(HOME_ENV)
    root = Path(base) if base else Path.home() / ".generativempc"
    root.mkdir(parents=True, exist_ok=True)
    return root


def settings_path() -> Path:
    return data_root() / "settings.json"


DEFAULT_SETTINGS = {
    "control_rate_hz": 50,
    "replan_every_ticks": 5,
    "horizon": 7,
    "mpc_dt": 0.15,
    "solver_method": "SLSQP",
    "solver_max_iterations": 60,
    # first-order (projected gradient, inf-norm) tolerance for the converged flag
    "solver_tolerance": 1e-4,
    "solver_ftol": 1e-9,
    "ik_damping": 0.05,
    "ik_feedback_gain": 10.0,
    "human_trigger_distance": 1.5,
    # consecutive clear ticks before an engaged human stops counting as near
    "human_release_ticks": 5,
    "human_radius": 0.3,
    "hand_clearance_margin": 0.01,
    "goal_position_tolerance": 0.010,
    "goal_heading_tolerance_deg": 2.0,
    "arm_tolerance": 0.0015,
    # Partial overrides of MpcWeights, e.g. {"w_hdg": 12.0}
    "mpc_weights": {},
    # Episode store file (absolute). If null, the per-preset file in the data root is used.
    "store_path": None,
    "log_level": "INFO",
}

SOLVER_METHODS = ("SLSQP", "L-BFGS-B")

# Table of compliance gains per named preset (simulation vs. hardware tuning).
GAIN_PRESETS = {
    "sim-base": {"K_i": 5.0, "D_i": 25.0, "K_a": 15.5, "D_a": 35.0, "k_theta": 7.5},
    "hw-base": {"K_i": 4.0, "D_i": 18.0, "K_a": 0.5, "D_a": 12.0, "k_theta": 4.0},
    "sim-arms": {"K_i": 35.0, "D_i": 15.0, "K_a": 50.0, "D_a": 20.0, "k_theta": 0.0},
    # Hardware arm gains were only exercised without a human in the workspace.
    "hw-arms": {"K_i": 8.0, "D_i": 25.0, "K_a": 15.0, "D_a": 30.0, "k_theta": 0.0},
}

PRESET_PAIRS = {
    "sim": {"base": "sim-base", "arms": "sim-arms", "arm_speed": 0.12},
    "hardware": {"base": "hw-base", "arms": "hw-arms", "arm_speed": 0.15},
}


def preset_pair(name: str) -> dict:
    try:
        return PRESET_PAIRS[name]
    except KeyError:
        known = ", ".join(sorted(PRESET_PAIRS))
        raise ConfigurationError(f"unknown preset '{name}' (known: {known})") from None


@dataclass
class Settings:
    control_rate_hz: int = DEFAULT_SETTINGS["control_rate_hz"]
    replan_every_ticks: int = DEFAULT_SETTINGS["replan_every_ticks"]
    horizon: int = DEFAULT_SETTINGS["horizon"]
    mpc_dt: float = DEFAULT_SETTINGS["mpc_dt"]
    solver_method: str = DEFAULT_SETTINGS["solver_method"]
    solver_max_iterations: int = DEFAULT_SETTINGS["solver_max_iterations"]
    solver_tolerance: float = DEFAULT_SETTINGS["solver_tolerance"]
    solver_ftol: float = DEFAULT_SETTINGS["solver_ftol"]
    ik_damping: float = DEFAULT_SETTINGS["ik_damping"]
    ik_feedback_gain: float = DEFAULT_SETTINGS["ik_feedback_gain"]
    human_trigger_distance: float = DEFAULT_SETTINGS["human_trigger_distance"]
    human_release_ticks: int = DEFAULT_SETTINGS["human_release_ticks"]
    human_radius: float = DEFAULT_SETTINGS["human_radius"]
    hand_clearance_margin: float = DEFAULT_SETTINGS["hand_clearance_margin"]
    goal_position_tolerance: float = DEFAULT_SETTINGS["goal_position_tolerance"]
    goal_heading_tolerance_deg: float = DEFAULT_SETTINGS["goal_heading_tolerance_deg"]
    arm_tolerance: float = DEFAULT_SETTINGS["arm_tolerance"]
    mpc_weights: dict = field(default_factory=dict)
    store_path: str | None = DEFAULT_SETTINGS["store_path"]
    log_level: str = DEFAULT_SETTINGS["log_level"]

    @property
    def control_dt(self) -> float:
        return 1.0 / self.control_rate_hz

    @classmethod
    def load(cls) -> "Settings":
        p = settings_path()
        if p.exists():
            try:
                data = json.loads(p.read_text(encoding="utf-8"))
            except Exception:
                data = {}
        else:
            data = {}
        if not isinstance(data, dict):
            data = {}
        known = {f.name for f in fields(cls)}
        merged = {**DEFAULT_SETTINGS, **{k: v for k, v in data.items() if k in known}}
        merged["mpc_weights"] = dict(merged.get("mpc_weights") or {})
        return cls(**merged)

    def save(self) -> None:
        p = settings_path()
        with p.open("w", encoding="utf-8") as f:
            json.dump(asdict(self), f, indent=2)

    def validate(self) -> "Settings":
        if self.control_rate_hz <= 0 or self.replan_every_ticks < 1:
            raise ConfigurationError("control rate and replan period must be positive")
        if self.horizon < 1:
            raise ConfigurationError(f"horizon must be >= 1, got {self.horizon}")
        if not self.mpc_dt > 0:
            raise ConfigurationError(f"mpc_dt must be > 0, got {self.mpc_dt}")
        if self.solver_method not in SOLVER_METHODS:
            raise ConfigurationError(f"unsupported solver method '{self.solver_method}'")
        if self.solver_max_iterations < 1:
            raise ConfigurationError("solver_max_iterations must be >= 1")
        if self.ik_damping < 0 or self.ik_feedback_gain < 0:
            raise ConfigurationError("IK damping and feedback gain must be non-negative")
        if self.human_release_ticks < 1:
            raise ConfigurationError(f"human_release_ticks must be >= 1, got {self.human_release_ticks}")
        if not self.human_radius > 0:
            raise ConfigurationError(f"human_radius must be > 0, got {self.human_radius}")
        return self
