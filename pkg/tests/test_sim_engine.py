import math
from pathlib import Path

import numpy as np
import pytest

from generativempc.config import Settings
from generativempc.dynamics import BasePose, ControlInput, WholeBodyState
from generativempc.errors import ConfigurationError
from generativempc.mpc.solver import MpcSolution
from generativempc.reporting import write_log_csv
from generativempc.semantics import TaskType, seed_store
from generativempc.sim import (
    Human,
    Simulator,
    build_scene,
    compute_metrics,
    detect_human_proximity,
    episode_from_run,
    evaluate_success,
    load_scenario,
    run_scenario,
    scenario_from_dict,
)
from generativempc.sim.engine import Plan

SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"
ARMS = {"left": [0.30, 0.18, 0.05], "right": [0.30, -0.18, 0.05]}


def _nav(**changes):
    data = {
        "name": "nav",
        "start": {"x": 0.0, "y": 0.0},
        "goal": {"x": 1.0, "y": 0.0},
        "arm_start": ARMS,
    }
    data.update(changes)
    return scenario_from_dict(data)


@pytest.fixture(scope="module")
def task1():
    scenario = load_scenario(SCENARIO_DIR / "task1_human_aware.yaml")
    log = run_scenario(scenario, Settings(), seed_store())
    return scenario, log, compute_metrics(log)


@pytest.fixture(scope="module")
def task2():
    scenario = load_scenario(SCENARIO_DIR / "task2_hand_avoidance.yaml")
    log = run_scenario(scenario, Settings(), seed_store())
    return scenario, log, compute_metrics(log)


class TestProximity:
    def test_within_trigger_distance(self):
        """A human at 1.2 m is near; at 2.0 m only the distance is reported"""
        pose = BasePose(0.0, 0.0, 0.0)
        assert detect_human_proximity(pose, (Human((1.2, 0.0)),)) == (True, pytest.approx(1.2))
        assert detect_human_proximity(pose, (Human((2.0, 0.0)),)) == (False, pytest.approx(2.0))

    def test_no_humans(self):
        assert detect_human_proximity(BasePose(), ()) == (False, math.inf)

    def test_accepts_whole_body_state(self):
        state = WholeBodyState(BasePose(1.0, 1.0, 0.0))
        near, distance = detect_human_proximity(state, (Human((1.0, 2.0)),))
        assert near and distance == pytest.approx(1.0)

    def test_nearest_of_several(self):
        humans = (Human((3.0, 0.0)), Human((0.0, -1.4)))
        assert detect_human_proximity(BasePose(), humans) == (True, pytest.approx(1.4))


class TestScene:
    def test_free_navigation(self):
        scene = build_scene(_nav(), BasePose(), 0.0)
        assert scene.task_type is TaskType.NAVIGATE
        assert not scene.human_present
        assert scene.free_space

    def test_distant_human_not_reported(self):
        """Humans beyond the trigger distance leave the scene human-free"""
        scene = build_scene(_nav(humans=[{"position": [2.0, 0.5]}]), BasePose(), 0.0)
        assert not scene.human_present
        assert math.isinf(scene.human_distance)

    def test_human_nearby(self):
        scene = build_scene(_nav(humans=[{"position": [1.2, 0.0]}]), BasePose(), 0.0)
        assert scene.human_present
        assert scene.human_distance == pytest.approx(1.2)
        assert not scene.free_space

    def test_obstacle_inside_influence_clears_free_space(self):
        scene = build_scene(_nav(obstacles=[{"center": [0.4, 0.0], "radius": 0.1}]), BasePose(), 0.0)
        assert not scene.free_space
        assert not scene.human_present

    def test_hand_counts_as_human(self):
        """An active hand marks the workspace occupied at its planar distance"""
        scenario = load_scenario(SCENARIO_DIR / "task2_hand_avoidance.yaml")
        before = build_scene(scenario, scenario.start, 0.0)
        during = build_scene(scenario, scenario.start, 1.0)
        assert not before.hand_in_workspace and before.free_space
        assert during.hand_in_workspace and during.human_present
        assert during.human_distance == pytest.approx(math.hypot(0.45, 0.05))
        assert during.object_count == 1


class TestScenario:
    def test_walking_human(self):
        """Walking humans follow their waypoints at constant speed and then stop"""
        human = Human((2.0, 0.75), waypoints=((2.3, 0.45),), speed=0.05)
        leg = math.hypot(0.3, 0.3)
        x, y = human.position_at(2.0)
        assert x == pytest.approx(2.0 + 0.3 * 0.1 / leg)
        assert y == pytest.approx(0.75 - 0.3 * 0.1 / leg)
        assert human.position_at(100.0) == (2.3, 0.45)
        assert human.position_at(0.0) == (2.0, 0.75)

    def test_standing_human(self):
        assert Human((1.0, 1.25)).position_at(30.0) == (1.0, 1.25)

    def test_bundled_scenarios_load(self):
        for path in sorted(SCENARIO_DIR.glob("*.yaml")):
            scenario = load_scenario(path)
            assert scenario.name == path.stem

    def test_defaults(self):
        """Arms default to the tucked posture and arm goals to the arm start"""
        scenario = scenario_from_dict({"start": {"x": 0, "y": 0}, "goal": {"x": 1, "y": 1, "theta_deg": 90}})
        assert scenario.arm_goals == scenario.arm_start
        assert scenario.arm_start["left"] == (0.30, 0.18, 0.05)
        assert scenario.goal.theta == pytest.approx(math.pi / 2)

    def test_default_human_radius(self):
        """Humans without a radius take the configured default; explicit radii win"""
        data = {
            "start": {"x": 0, "y": 0},
            "goal": {"x": 1, "y": 0},
            "humans": [{"position": [1.0, 1.0]}, {"position": [2.0, 1.0], "radius": 0.2}],
        }
        assert scenario_from_dict(data).humans[0].radius == pytest.approx(0.3)
        humans = scenario_from_dict(data, human_radius=0.4).humans
        assert humans[0].radius == pytest.approx(0.4)
        assert humans[1].radius == pytest.approx(0.2)

    def test_hand_schedule(self):
        scenario = load_scenario(SCENARIO_DIR / "task2_hand_avoidance.yaml")
        assert scenario.hand_at(0.49) is None
        assert scenario.hand_at(0.5) is not None
        assert scenario.hand_at(3.0) is None
        assert scenario.hand_pending(2.9) and not scenario.hand_pending(3.0)

    def test_human_discs_are_obstacles(self):
        scenario = load_scenario(SCENARIO_DIR / "task1_human_aware.yaml")
        assert len(scenario.obstacles_at(0.0)) == 3

    @pytest.mark.parametrize(
        "data",
        [
            {"goal": {"x": 1, "y": 0}},
            {"start": {"x": 0, "y": 0}, "goal": {"x": 0, "y": 0}},
            {"start": {"x": 0, "y": 0}, "goal": {"x": 1, "y": 0}, "task_type": "juggle"},
            {"start": {"x": 0, "y": 0}, "goal": {"x": 1, "y": 0}, "success": {"max_fun": 1}},
            {"start": {"x": 0, "y": 0}, "goal": {"x": 1, "y": 0}, "duration_limit": 0},
            {"start": {"x": 0, "y": 0}, "goal": {"x": 1, "y": 0}, "arm_start": {"left": [0, 0, 0]}},
            {"start": {"x": 0, "y": 0}, "goal": {"x": 1, "y": 0}, "mpc_weights": {"w_typo": 1}},
            {"start": {"x": 0, "y": 0}, "goal": {"x": 1, "y": 0},
             "hand_events": [{"enter_time": 2, "exit_time": 1, "position": [0, 0, 0]}]},
            {"start": {"x": 0, "y": 0}, "goal": {"x": 1, "y": 0}, "humans": [{"radius": 0.3}]},
        ],
    )
    def test_invalid_scenarios(self, data):
        """Malformed scenario mappings raise ConfigurationError"""
        with pytest.raises(ConfigurationError):
            scenario_from_dict(data)

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("start: [unclosed\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_scenario(path)

    def test_not_a_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_scenario(path)


class TestPlan:
    @pytest.fixture
    def plan(self):
        arms = ((0.3, 0.18, 0.05), (0.3, -0.18, 0.05))
        predicted = (WholeBodyState(BasePose(0.0, 0.0, 0.0), *arms), WholeBodyState(BasePose(0.03, 0.0, 0.1), *arms))
        solution = MpcSolution((ControlInput(0.2, 2 / 3),), predicted, 0.0, 1, True)
        return Plan(1.0, 0.15, solution)

    def test_interpolates_between_states(self, plan):
        """Heading and turn rate follow the planned control of the current step"""
        ref = plan.reference(1.075)
        assert ref.base_xy == pytest.approx([0.015, 0.0])
        assert ref.base_vel == pytest.approx([0.2, 0.0])
        assert ref.theta == pytest.approx(0.05)
        assert ref.omega == pytest.approx(2 / 3)

    def test_holds_final_state(self, plan):
        """Past the horizon the reference rests at the last predicted state"""
        ref = plan.reference(5.0)
        assert ref.base_xy == pytest.approx([0.03, 0.0])
        assert ref.base_vel.tolist() == [0.0, 0.0]
        assert ref.theta == pytest.approx(0.1)
        assert ref.omega == 0.0

    def test_before_plan_time(self, plan):
        assert plan.reference(0.5).base_xy == pytest.approx([0.0, 0.0])


class TestHumanAwareNavigation:
    def test_reaches_goal(self, task1):
        """The base ends within 10 mm and 2 degrees of the goal"""
        _, _, m = task1
        assert m.position_error <= 0.010
        assert math.degrees(m.heading_error) <= 2.0

    def test_never_touches_obstacles(self, task1):
        _, _, m = task1
        assert m.min_clearance > 0.0

    def test_slows_down_near_humans(self, task1):
        """Every human-near tick runs at or below 0.10 m/s under the conservative profile"""
        _, log, m = task1
        near = [tk for tk in log.ticks if tk.human_near]
        assert near
        assert all(abs(tk.v) <= 0.10 for tk in near)
        assert all(tk.profile == "human-proximate-navigation" for tk in near)
        assert m.speed_reduction == pytest.approx(0.60, abs=0.01)

    def test_profile_restored_after_humans(self, task1):
        _, log, m = task1
        assert log.ticks[0].profile == "free-navigation"
        assert m.profile_restore_time is not None
        assert m.profile_restore_time <= 0.1

    def test_meets_declared_thresholds(self, task1):
        scenario, _, m = task1
        ok, failed = evaluate_success(m, scenario.success)
        assert ok, failed
        assert m.profile_switches <= 2

    def test_episode_write_back(self, task1):
        """A finished run becomes an episode with the final scene and profile"""
        _, log, m = task1
        episode = episode_from_run(log, m, True, name="task1-6")
        assert episode.name == "task1-6"
        assert episode.scene.task_type is TaskType.NAVIGATE
        assert episode.profile == log.final_profile
        assert episode.outcome.final_position_error == m.position_error


class TestHeadingRegulation:
    def test_turns_onto_goal_heading(self):
        """A goal 30 degrees off the current heading is reached by turning on the spot"""
        scenario = _nav(goal={"x": 0.005, "y": 0.0, "theta_deg": 30.0}, duration_limit=20.0)
        log = run_scenario(scenario, Settings(), seed_store())
        m = compute_metrics(log)
        assert math.degrees(log.ticks[0].heading_error) == pytest.approx(30.0)
        assert log.ticks[0].omega > 0.0
        assert math.degrees(m.heading_error) <= 2.0
        assert m.position_error <= 0.010
        assert log.ticks[-1].t < scenario.duration_limit


class TestShippedNavigationScenarios:
    @pytest.mark.parametrize("name", ["task1_walking_human", "shared_workspace"])
    def test_meets_declared_thresholds(self, name):
        scenario = load_scenario(SCENARIO_DIR / f"{name}.yaml")
        m = compute_metrics(run_scenario(scenario, Settings(), seed_store()))
        ok, failed = evaluate_success(m, scenario.success)
        assert ok, failed
        assert m.profile_switches <= 2


class TestHumanEngagement:
    def test_engaged_scene_keeps_human(self):
        """While engaged, a human just past the trigger distance is still reported"""
        scenario = _nav(humans=[{"position": [1.55, 0.0]}])
        assert not build_scene(scenario, BasePose(), 0.0).human_present
        scene = build_scene(scenario, BasePose(), 0.0, engaged=True)
        assert scene.human_present
        assert scene.human_distance == pytest.approx(1.55)
        assert not build_scene(_nav(), BasePose(), 0.0, engaged=True).human_present

    def test_boundary_chatter_does_not_switch_profiles(self):
        """A human flickering across the trigger distance every tick engages once"""
        flicker = [[1.49, 0.0], [1.51, 0.0]] * 30
        scenario = scenario_from_dict({
            "name": "flicker",
            "task_type": "bimanual_reach",
            "start": {"x": 0.0, "y": 0.0},
            "arm_start": {"left": [0.25, 0.20, 0.25], "right": [0.25, -0.20, 0.25]},
            "arm_goals": {"left": [0.40, 0.12, 0.15], "right": [0.40, -0.12, 0.15]},
            "humans": [{"position": [1.51, 0.0], "waypoints": flicker, "speed": 1.0}],
            "duration_limit": 1.0,
        })
        sim = Simulator(Settings(), seed_store())
        log = sim.run(scenario)
        m = compute_metrics(log)
        near = [tk.human_near for tk in log.ticks]
        assert sum(1 for a, b in zip(near, near[1:]) if a != b) >= 40
        assert m.profile_switches <= 1
        assert m.solves <= len(log.ticks) // 5 + 2
        assert sim.human_engaged

    def test_release_within_one_replan_period(self):
        """After the last near tick the profile comes back within 0.1 s"""
        settings = Settings()
        assert (settings.human_release_ticks - 1) * settings.control_dt <= 0.1


class TestHandAvoidance:
    def test_keeps_away_from_hand(self, task2):
        """End effectors stay at least d_safe from the hand while it is present"""
        _, log, m = task2
        assert any(tk.hand_active for tk in log.ticks)
        assert m.min_hand_distance >= 0.15

    def test_reaches_arm_goals_after_hand_leaves(self, task2):
        _, log, m = task2
        assert m.arm_error < 0.002
        assert m.position_error <= 0.010
        assert log.ticks[-1].t >= 3.0

    def test_hand_profile_while_present(self, task2):
        _, log, m = task2
        assert all(tk.profile == "bimanual-reach-hand" for tk in log.ticks if tk.hand_active)
        assert log.ticks[0].profile == "bimanual-reach"
        assert m.profile_restore_time is not None and m.profile_restore_time <= 0.1

    def test_arm_speed_capped(self, task2):
        """Commanded end-effector rates respect the active profile limit"""
        _, log, _ = task2
        for tk in log.ticks:
            cap = 0.05 if tk.profile == "bimanual-reach-hand" else 0.12
            rates = (tk.left_vx, tk.left_vy, tk.left_vz, tk.right_vx, tk.right_vy, tk.right_vz)
            assert max(abs(r) for r in rates) <= cap * 1.5

    def test_no_singularities(self, task2):
        _, _, m = task2
        assert m.singularity_events == 0


class TestDeterminism:
    def test_repeat_runs_identical(self, task1, tmp_path):
        """A second run of the same scenario writes a byte-identical log"""
        scenario, log, _ = task1
        again = run_scenario(scenario, Settings(), seed_store())
        a = write_log_csv(log, tmp_path / "a.csv")
        b = write_log_csv(again, tmp_path / "b.csv")
        assert a.read_bytes() == b.read_bytes()

    def test_threaded_runs_identical(self, tmp_path):
        """Background planning is repeatable and still meets the thresholds"""
        scenario = load_scenario(SCENARIO_DIR / "task2_hand_avoidance.yaml")
        logs = [Simulator(Settings(), seed_store(), threaded=True).run(scenario) for _ in range(2)]
        a = write_log_csv(logs[0], tmp_path / "a.csv")
        b = write_log_csv(logs[1], tmp_path / "b.csv")
        assert a.read_bytes() == b.read_bytes()
        assert compute_metrics(logs[0]).min_hand_distance >= 0.15

    def test_solves_recorded(self, task2):
        _, log, m = task2
        assert log.ticks[0].solved
        assert m.solves >= len(log.ticks) // 5
        assert not log.ticks[-1].solved


class TestSimulatorConfig:
    def test_invalid_settings_rejected(self):
        with pytest.raises(ConfigurationError):
            Simulator(Settings(solver_method="newton"), seed_store())

    def test_final_tick_at_duration_limit(self):
        """A run that cannot finish stops at the duration limit with a zero command"""
        scenario = _nav(duration_limit=0.1)
        log = Simulator(Settings(), seed_store()).run(scenario)
        assert len(log.ticks) == 6
        assert log.ticks[-1].t == pytest.approx(0.1)
        assert log.ticks[-1].v == 0.0
        assert np.isfinite(log.ticks[-1].position_error)
