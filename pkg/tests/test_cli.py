from pathlib import Path

import pytest
import yaml

from generativempc.db.episodes import load_store
from generativempc.errors import ConfigurationError
from generativempc.main import RunConfig, cli

SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"


@pytest.fixture
def store_file(tmp_path):
    return tmp_path / "store" / "episodes.jsonl"


class TestSeedDb:
    def test_writes_five_episodes(self, store_file, capsys):
        assert cli(["--store", str(store_file), "seed-db"]) == 0
        assert len(store_file.read_text(encoding="utf-8").splitlines()) == 5
        assert "Seeded 5 episodes" in capsys.readouterr().out

    def test_idempotent(self, store_file):
        """Seeding twice produces the same bytes"""
        cli(["--store", str(store_file), "seed-db"])
        first = store_file.read_bytes()
        cli(["--store", str(store_file), "seed-db"])
        assert store_file.read_bytes() == first

    def test_default_location(self, data_home):
        """Without --store the per-preset file in the data root is used"""
        assert cli(["seed-db", "--preset", "hardware"]) == 0
        assert (data_home / "episodes-hardware.jsonl").exists()

    def test_unwritable_target(self, tmp_path):
        blocker = tmp_path / "file.txt"
        blocker.write_text("not a directory", encoding="utf-8")
        assert cli(["--store", str(blocker / "episodes.jsonl"), "seed-db"]) != 0

    def test_unknown_preset(self, store_file):
        with pytest.raises(SystemExit):
            cli(["--store", str(store_file), "seed-db", "--preset", "moon"])


class TestRun:
    def test_hand_avoidance_run(self, store_file, tmp_path, capsys):
        """A run writes its log and metrics, prints the summary and grows the store"""
        out = tmp_path / "runs"
        code = cli([
            "--store", str(store_file),
            "run", "--scenario", str(SCENARIO_DIR / "task2_hand_avoidance.yaml"), "--out", str(out),
        ])
        assert code == 0
        assert (out / "task2_hand_avoidance.csv").exists()
        metrics = yaml.safe_load((out / "task2_hand_avoidance.metrics.yaml").read_text(encoding="utf-8"))
        assert metrics["success"] is True
        assert metrics["failed_checks"] == []
        store = load_store(store_file)
        assert len(store) == 6
        assert store.episodes[-1].name == "task2_hand_avoidance-6"
        assert "Performance summary: task2_hand_avoidance" in capsys.readouterr().out

        assert cli(["report", str(out / "task2_hand_avoidance.csv")]) == 0
        first = capsys.readouterr().out
        assert "Min hand distance" in first
        cli(["report", str(out / "task2_hand_avoidance.csv")])
        assert capsys.readouterr().out == first

    def test_failed_thresholds_exit_code(self, store_file, tmp_path):
        """Missing a declared threshold exits with 2 and records a failed episode"""
        scenario = tmp_path / "short.yaml"
        scenario.write_text(
            yaml.safe_dump({
                "name": "short",
                "start": {"x": 0.0, "y": 0.0},
                "goal": {"x": 1.0, "y": 0.0},
                "duration_limit": 0.2,
                "success": {"max_position_error": 0.010},
            }),
            encoding="utf-8",
        )
        code = cli(["--store", str(store_file), "run", "--scenario", str(scenario), "--out", str(tmp_path / "o")])
        assert code == 2
        assert load_store(store_file).episodes[-1].outcome.success is False

    def test_missing_scenario(self, store_file, tmp_path):
        code = cli(["--store", str(store_file), "run", "--scenario", str(tmp_path / "nope.yaml")])
        assert code == 1

    def test_run_config_validation(self, tmp_path):
        with pytest.raises(ConfigurationError):
            RunConfig(scenario=SCENARIO_DIR / "task2_hand_avoidance.yaml", preset="moon")
        with pytest.raises(ConfigurationError):
            RunConfig(scenario=tmp_path / "missing.yaml")

    def test_corrupt_store(self, store_file, tmp_path):
        store_file.parent.mkdir(parents=True)
        store_file.write_text("{not json\n", encoding="utf-8")
        code = cli([
            "--store", str(store_file),
            "run", "--scenario", str(SCENARIO_DIR / "task2_hand_avoidance.yaml"), "--out", str(tmp_path / "o"),
        ])
        assert code == 1


class TestReport:
    def test_empty_log(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("", encoding="utf-8")
        assert cli(["report", str(path)]) == 1

    def test_missing_log(self, tmp_path):
        assert cli(["report", str(tmp_path / "absent.csv")]) == 1


class TestShowStore:
    def test_lists_episodes(self, store_file, capsys):
        cli(["--store", str(store_file), "seed-db"])
        capsys.readouterr()
        assert cli(["--store", str(store_file), "show-store"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert len(out) == 5
        assert out[1].startswith("human-proximate-navigation")
        assert "v_max=0.10" in out[1]

    def test_missing_store(self, tmp_path):
        assert cli(["--store", str(tmp_path / "absent.jsonl"), "show-store"]) == 1


class TestStoreAfterSubcommand:
    def test_seed_and_show(self, store_file, capsys):
        """--store is accepted after seed-db and show-store"""
        assert cli(["seed-db", "--store", str(store_file)]) == 0
        assert len(store_file.read_text(encoding="utf-8").splitlines()) == 5
        capsys.readouterr()
        assert cli(["show-store", "--store", str(store_file)]) == 0
        assert len(capsys.readouterr().out.splitlines()) == 5

    def test_run(self, store_file, tmp_path):
        """run --store seeds and grows the named store"""
        code = cli([
            "run", "--scenario", str(SCENARIO_DIR / "task2_hand_avoidance.yaml"),
            "--out", str(tmp_path / "runs"), "--store", str(store_file),
        ])
        assert code == 0
        assert len(load_store(store_file)) == 6

    def test_subcommand_flag_missing_keeps_global(self, store_file):
        """A global --store is not cleared by the subcommand's own option"""
        assert cli(["--store", str(store_file), "seed-db", "--preset", "sim"]) == 0
        assert store_file.exists()
