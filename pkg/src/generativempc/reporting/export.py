from __future__ import annotations

import csv
import math
from dataclasses import fields
from pathlib import Path
from typing import Optional

import yaml

from ..errors import ConfigurationError
from ..sim.metrics import TICK_COLUMNS, RunLog, RunMetrics, TickRecord
from ..utils.constants import PLATFORM_V_MAX

# Per-tick CSV: one row per control tick, columns in TICK_COLUMNS order, floats via repr
# so a log reads back bit for bit.

_BOOL_COLUMNS = {"human_near", "hand_active", "solved", "converged"}
_STR_COLUMNS = {"profile"}


def _cell(name: str, value) -> str:
    if name in _BOOL_COLUMNS:
        return "1" if value else "0"
    if name in _STR_COLUMNS:
        return str(value)
    return repr(float(value))


def _parse(name: str, text: str):
    if name in _BOOL_COLUMNS:
        if text not in ("0", "1"):
            raise ValueError(f"expected 0/1, got {text!r}")
        return text == "1"
    if name in _STR_COLUMNS:
        return text
    return float(text)


def write_log_csv(log: RunLog, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TICK_COLUMNS)
        for tick in log.ticks:
            writer.writerow([_cell(name, getattr(tick, name)) for name in TICK_COLUMNS])
    return path


def read_log_csv(
    path: Path,
    scenario: Optional[str] = None,
    nominal_v_max: float = PLATFORM_V_MAX,
    position_tolerance: float = 0.010,
) -> RunLog:
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ConfigurationError(f"{path}: empty run log")
    header, body = tuple(rows[0]), rows[1:]
    if header != TICK_COLUMNS:
        raise ConfigurationError(f"{path}: unexpected columns; is this a run log?")
    if not body:
        raise ConfigurationError(f"{path}: run log has no ticks")
    ticks = []
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(TICK_COLUMNS):
            raise ConfigurationError(f"{path}:{lineno}: expected {len(TICK_COLUMNS)} columns, got {len(row)}")
        try:
            ticks.append(TickRecord(*(_parse(name, text) for name, text in zip(TICK_COLUMNS, row))))
        except ValueError as exc:
            raise ConfigurationError(f"{path}:{lineno}: {exc}") from None
    return RunLog(
        scenario or path.stem,
        ticks,
        nominal_v_max=nominal_v_max,
        position_tolerance=position_tolerance,
    )


def write_metrics(metrics: RunMetrics, path: Path, extra: Optional[dict] = None) -> Path:
    """Metrics summary as a YAML mapping in RunMetrics field order (plus ``extra`` keys)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = {f.name: getattr(metrics, f.name) for f in fields(metrics)}
    data.update(extra or {})
    with path.open("w", encoding="utf-8", newline="\n") as f:
        yaml.safe_dump(data, f, sort_keys=False, default_flow_style=False)
    return path


def _fmt(value: Optional[float], unit: str, scale: float = 1.0, digits: int = 2) -> str:
    if value is None or math.isinf(value):
        return "n/a"
    return f"{value * scale:.{digits}f} {unit}"


def format_report(metrics: RunMetrics) -> list[str]:
    """Performance summary lines, navigation metrics first, then arm and safety metrics."""
    m = metrics
    reduction = "n/a" if m.speed_reduction is None else f"{m.speed_reduction * 100:.0f}%"
    if m.converged_fraction is None:
        convergence = "n/a"
    else:
        convergence = f"{m.converged_fraction * 100:.0f}% of {m.solves} solves"
    return [
        f"Performance summary: {m.scenario}",
        f"Final position: ({m.final_x:.3f}, {m.final_y:.3f}) m",
        f"Position error: {_fmt(m.position_error, 'mm', 1000.0)}",
        f"Heading error: {_fmt(math.degrees(m.heading_error), 'deg')}",
        f"Navigation time: {_fmt(m.navigation_time, 's')}",
        f"Speed reduction: {reduction}",
        f"Arm EE error: {_fmt(m.arm_error, 'mm', 1000.0)}",
        f"Min obstacle clearance: {_fmt(m.min_clearance, 'm', digits=3)}",
        f"Min hand distance: {_fmt(m.min_hand_distance, 'm', digits=3)}",
        f"Profile restore time: {_fmt(m.profile_restore_time, 's')}",
        f"Profile switches: {m.profile_switches}",
        f"Singularity events: {m.singularity_events}",
        f"Solver convergence: {convergence}",
        f"Duration: {_fmt(m.duration, 's')} ({m.ticks} ticks)",
    ]
