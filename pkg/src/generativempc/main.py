from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from generativempc.config import PRESET_PAIRS, Settings, preset_pair
from generativempc.db.episodes import load_store, save_store, set_store_path, store_path
from generativempc.errors import ConfigurationError, GenerativeMpcError
from generativempc.reporting.export import format_report, read_log_csv, write_log_csv, write_metrics
from generativempc.semantics.retrieval import record_episode
from generativempc.semantics.seeds import seed_store
from generativempc.sim.engine import episode_from_run, run_scenario
from generativempc.sim.metrics import compute_metrics, evaluate_success
from generativempc.sim.scenario import load_scenario
from generativempc.utils.logging import get_logger, set_level

logger = get_logger()


@dataclass
class RunConfig:
    scenario: Path
    preset: str = "sim"
    out: Path = Path("runs")
    store: Optional[Path] = None
    # reserved: nothing in a run draws random numbers yet
    seed: int = 0
    verbosity: int = 0
    threaded: bool = False

    def __post_init__(self):
        self.scenario = Path(self.scenario)
        self.out = Path(self.out)
        self.store = Path(self.store) if self.store is not None else None
        preset_pair(self.preset)
        if not self.scenario.is_file():
            raise ConfigurationError(f"scenario file not found: {self.scenario}")


def cmd_seed_db(path: Path, preset: str = "sim") -> int:
    try:
        store = seed_store(preset)
        target = save_store(store, path)
    except (GenerativeMpcError, OSError) as exc:
        logger.error(f"seed-db failed: {exc}")
        return 1
    logger.info(f"Seeded {len(store)} '{preset}' episodes -> {target}")
    print(f"Seeded {len(store)} episodes -> {target}")
    return 0


def cmd_run(config: RunConfig) -> int:
    try:
        settings = Settings.load()
        scenario = load_scenario(config.scenario, human_radius=settings.human_radius)
        path = config.store or store_path(config.preset)
        if not path.exists():
            logger.info(f"No episode store at {path}; seeding from preset '{config.preset}'")
            save_store(seed_store(config.preset), path)
        store = load_store(path)
        logger.debug(f"Run seed {config.seed}")

        log = run_scenario(scenario, settings, store, threaded=config.threaded)
        metrics = compute_metrics(log)
        ok, failed = evaluate_success(metrics, scenario.success)

        csv_path = write_log_csv(log, config.out / f"{scenario.name}.csv")
        write_metrics(
            metrics,
            config.out / f"{scenario.name}.metrics.yaml",
            {"success": ok, "failed_checks": failed},
        )
        record_episode(store, episode_from_run(log, metrics, ok, name=f"{scenario.name}-{len(store) + 1}"), path)
    except (GenerativeMpcError, OSError) as exc:
        logger.error(f"run failed: {exc}")
        return 1

    for line in format_report(metrics):
        print(line)
    print(f"Log: {csv_path}")
    if not ok:
        for check in failed:
            logger.warning(f"Success check failed: {check}")
        return 2
    return 0


def cmd_report(log_path: Path) -> int:
    try:
        metrics = compute_metrics(read_log_csv(log_path))
    except (GenerativeMpcError, OSError) as exc:
        logger.error(f"report failed: {exc}")
        return 1
    for line in format_report(metrics):
        print(line)
    return 0


def cmd_show_store(path: Path) -> int:
    try:
        store = load_store(path)
    except (GenerativeMpcError, OSError) as exc:
        logger.error(f"show-store failed: {exc}")
        return 1
    for episode in store:
        p = episode.profile
        status = "ok" if episode.outcome.success else "failed"
        print(
            f"{episode.name:32s} {episode.scene.task_type.value:15s} "
            f"v_max={p.v_max:.2f} d_safe={p.d_safe:.2f} {status}"
        )
    return 0


def cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="generativempc")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More log output (-v: debug)")
    store_help = "Episode store file (default: per-preset file in the data root)"
    parser.add_argument("--store", type=Path, help=store_help)
    # also accepted after the subcommand; SUPPRESS keeps an absent flag from clearing the global one
    store_opt = argparse.ArgumentParser(add_help=False)
    store_opt.add_argument("--store", type=Path, default=argparse.SUPPRESS, help=store_help)
    sub = parser.add_subparsers(dest="command", required=True)

    p_seed = sub.add_parser("seed-db", parents=[store_opt], help="Write the five demonstration episodes")
    p_seed.add_argument("--preset", choices=sorted(PRESET_PAIRS), default="sim")

    p_run = sub.add_parser("run", parents=[store_opt], help="Run a scenario and write log + metrics")
    p_run.add_argument("--scenario", type=Path, required=True)
    p_run.add_argument("--preset", choices=sorted(PRESET_PAIRS), default="sim")
    p_run.add_argument("--out", type=Path, default=Path("runs"))
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--threaded", action="store_true", help="Solve the MPC on a worker thread")

    p_report = sub.add_parser("report", help="Print the performance summary of a saved run log")
    p_report.add_argument("log", type=Path)

    p_show = sub.add_parser("show-store", parents=[store_opt], help="List stored episodes")
    p_show.add_argument("--preset", choices=sorted(PRESET_PAIRS), default="sim")

    args = parser.parse_args(argv)
    set_level("DEBUG" if args.verbose else Settings.load().log_level)
    set_store_path(args.store)

    if args.command == "seed-db":
        return cmd_seed_db(store_path(args.preset), args.preset)
    if args.command == "run":
        try:
            config = RunConfig(
                scenario=args.scenario,
                preset=args.preset,
                out=args.out,
                store=args.store,
                seed=args.seed,
                verbosity=args.verbose,
                threaded=args.threaded,
            )
        except ConfigurationError as exc:
            logger.error(f"run failed: {exc}")
            return 1
        return cmd_run(config)
    if args.command == "report":
        return cmd_report(args.log)
    return cmd_show_store(store_path(args.preset))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(cli())
