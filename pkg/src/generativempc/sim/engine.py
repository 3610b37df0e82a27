"""Closed-loop scenario runner: a 50 Hz compliance loop around periodic whole-body MPC replans.

The truth model is the MPC model itself (unicycle base, joint-space arms whose end
effectors are read back through forward kinematics), so runs are exactly repeatable.
"""
from __future__ import annotations

import math
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from ..compliance.controller import (
    AdmittanceState,
    admittance_update,
    base_command,
    body_twist,
    project_outside_sphere,
    separate_end_effectors,
    virtual_force,
    wheel_speeds,
)
from ..compliance.kinematics import (
    READY_POSTURE,
    KinematicChain,
    default_so101_chain,
    dls_ik,
    integrate_joint_command,
    min_singular_value,
    solve_ik,
)
from ..config import Settings
from ..dynamics import (
    BasePose,
    ControlInput,
    DriveGeometry,
    WholeBodyState,
    ee_world,
    step_base,
    world_to_base,
    wrap_angle,
)
from ..mpc.costs import MpcProblem, MpcWeights
from ..mpc.solver import MpcSolution, shift_warm_start, solve
from ..semantics.retrieval import (
    ControlProfile,
    Episode,
    EpisodeOutcome,
    EpisodeStore,
    SceneDescription,
    retrieve_profile,
)
from ..semantics.seeds import seed_store
from ..utils.constants import HUMAN_TRIGGER_DISTANCE, PLATFORM_V_MAX
from ..utils.logging import get_logger
from .metrics import RunLog, RunMetrics, TickRecord
from .scenario import Human, Scenario

logger = get_logger()

SIDES = ("left", "right")


def detect_human_proximity(
    state, humans: tuple[Human, ...], t: float = 0.0, threshold: float = HUMAN_TRIGGER_DISTANCE
) -> tuple[bool, float]:
    """Nearest planar base-to-human distance and whether it is within ``threshold``."""
    pose = state.base if isinstance(state, WholeBodyState) else state
    nearest = math.inf
    for human in humans:
        hx, hy = human.position_at(t)
        nearest = min(nearest, math.hypot(hx - pose.x, hy - pose.y))
    return nearest <= threshold, nearest


def build_scene(
    scenario: Scenario,
    pose: BasePose,
    t: float,
    threshold: float = HUMAN_TRIGGER_DISTANCE,
    rho0: float = MpcWeights.rho0,
    engaged: bool = False,
) -> SceneDescription:
    """Scene description from simulator truth.

    Only humans inside the trigger distance are reported, or the nearest human while
    ``engaged`` holds it; a hand in the workspace counts as a present human at its
    planar distance from the base.
    """
    near, distance = detect_human_proximity(pose, scenario.humans, t, threshold)
    near = near or (engaged and math.isfinite(distance))
    reported = distance if near else math.inf
    hand = scenario.hand_at(t)
    if hand is not None:
        reported = min(reported, math.hypot(hand.position[0] - pose.x, hand.position[1] - pose.y))
    present = near or hand is not None
    clear = all(o.clearance((pose.x, pose.y)) >= rho0 for o in scenario.obstacles)
    return SceneDescription(
        task_type=scenario.task_type,
        human_present=present,
        human_distance=reported,
        hand_in_workspace=hand is not None,
        object_count=scenario.object_count,
        free_space=not present and clear,
    )


@dataclass(frozen=True)
class Reference:
    base_xy: np.ndarray
    base_vel: np.ndarray
    theta: float
    omega: float
    arms: dict


@dataclass(frozen=True)
class Plan:
    """A solved horizon and the time its initial state was measured."""

    t0: float
    dt: float
    solution: MpcSolution

    @cached_property
    def trajectory(self) -> np.ndarray:
        return np.array([s.flatten() for s in self.solution.predicted])

    def reference(self, t: float) -> Reference:
        """Piecewise-linear interpolation of the predicted states at time ``t``.

        The heading follows the planned turn rate of the current step, so it stays
        consistent across the +-pi wrap.
        """
        traj = self.trajectory
        n = traj.shape[0] - 1
        tau = max(t - self.t0, 0.0)
        if tau >= n * self.dt:
            pos = traj[n]
            vel = np.zeros_like(pos)
            theta, omega = float(traj[n, 2]), 0.0
        else:
            i = min(int(tau // self.dt), n - 1)
            vel = (traj[i + 1] - traj[i]) / self.dt
            pos = traj[i] + vel * (tau - i * self.dt)
            omega = self.solution.controls[i].omega
            theta = wrap_angle(traj[i, 2] + omega * (tau - i * self.dt))
        return Reference(
            base_xy=pos[0:2],
            base_vel=vel[0:2],
            theta=theta,
            omega=omega,
            arms={"left": (pos[3:6], vel[3:6]), "right": (pos[6:9], vel[6:9])},
        )


class Simulator:
    def __init__(
        self,
        settings: Optional[Settings] = None,
        store: Optional[EpisodeStore] = None,
        *,
        threaded: bool = False,
        geometry: Optional[DriveGeometry] = None,
        chains: Optional[dict[str, KinematicChain]] = None,
    ):
        self.settings = (settings or Settings.load()).validate()
        self.store = store if store is not None else seed_store()
        self.threaded = threaded
        self.geometry = geometry or DriveGeometry()
        self.chains = chains or {side: default_so101_chain(side) for side in SIDES}
        self.profile: Optional[ControlProfile] = None
        self.plan: Optional[Plan] = None

    # -- setup ---------------------------------------------------------------------

    def _reset(self, scenario: Scenario) -> None:
        s = self.settings
        self.scenario = scenario
        self.weights = MpcWeights.with_overrides({**s.mpc_weights, **scenario.mpc_weights})
        self.pose = scenario.start
        self.base_vel = np.zeros(2)
        self.q: dict[str, np.ndarray] = {}
        self.ee: dict[str, np.ndarray] = {}
        self.ee_vel: dict[str, np.ndarray] = {}
        for side in SIDES:
            chain = self.chains[side]
            q, ok = solve_ik(chain, scenario.arm_start[side], READY_POSTURE, lam=s.ik_damping)
            if not ok:
                logger.warning(f"{side} arm start {scenario.arm_start[side]} not reached exactly by IK")
            self.q[side] = q
            self.ee[side] = chain.forward(q)
            self.ee_vel[side] = np.zeros(3)
        self.u_prev = ControlInput()
        self.profile = None
        self.plan = None
        self.last_solution: Optional[MpcSolution] = None
        self.adm: dict[str, AdmittanceState] = {}
        self.hazard: Optional[tuple[bool, bool]] = None
        self.human_engaged = False
        self.clear_ticks = 0
        self.pending: Optional[Future] = None
        self.pending_t0 = 0.0

    # -- semantic layer ------------------------------------------------------------

    def _select_profile(self, scene: SceneDescription, t: float) -> None:
        profile, similarity = retrieve_profile(scene, self.store)
        if profile != self.profile:
            old = self.profile.name if self.profile else None
            if old is not None:
                logger.info(f"t={t:.2f}s profile {old} -> {profile.name} (similarity {similarity:.3f})")
            self.profile = profile

    def _update_engagement(self, t: float) -> None:
        """A human engages on the first near tick and releases after a run of clear ticks."""
        s = self.settings
        near, _ = detect_human_proximity(self.pose, self.scenario.humans, t, s.human_trigger_distance)
        self.clear_ticks = 0 if near else self.clear_ticks + 1
        self.human_engaged = near or (self.human_engaged and self.clear_ticks < s.human_release_ticks)

    def _hand_radius(self) -> float:
        return self.profile.d_safe + self.settings.hand_clearance_margin

    # -- planning ------------------------------------------------------------------

    def _problem(self, t: float) -> MpcProblem:
        s = self.settings
        hand = self.scenario.hand_at(t)
        goals = {}
        for side in SIDES:
            goal = np.array(self.scenario.arm_goals[side])
            if hand is not None:
                goal = project_outside_sphere(goal, world_to_base(self.pose, hand.position), self._hand_radius())
            goals[side] = tuple(goal)
        return MpcProblem(
            x0=WholeBodyState(self.pose, tuple(self.ee["left"]), tuple(self.ee["right"])),
            goal_base=self.scenario.goal,
            goal_left=goals["left"],
            goal_right=goals["right"],
            obstacles=self.scenario.obstacles_at(t),
            weights=self.weights,
            limits=self.profile.limits,
            N=s.horizon,
            dt=s.mpc_dt,
            u_prev=self.u_prev,
        )

    def _solve(self, problem: MpcProblem, warm) -> MpcSolution:
        s = self.settings
        return solve(
            problem,
            warm,
            method=s.solver_method,
            max_iterations=s.solver_max_iterations,
            tolerance=s.solver_tolerance,
            ftol=s.solver_ftol,
        )

    def _install(self, solution: MpcSolution, t0: float, t: float) -> None:
        """Adopt a plan and reset every admittance state onto its reference."""
        self.plan = Plan(t0, self.settings.mpc_dt, solution)
        self.last_solution = solution
        ref = self.plan.reference(t)
        self.adm["base"] = AdmittanceState.at(ref.base_xy, ref.base_vel)
        for side in SIDES:
            x_d, xdot_d = self._arm_reference(ref, side, t)
            self.adm[side] = AdmittanceState.at(x_d, xdot_d)

    def _replan(self, t: float, pool: Optional[ThreadPoolExecutor]) -> tuple[bool, bool]:
        problem = self._problem(t)
        warm = shift_warm_start(self.last_solution.controls) if self.last_solution else None
        if pool is None:
            solution = self._solve(problem, warm)
            self._install(solution, t, t)
            return True, solution.converged

        installed, converged = False, False
        if self.pending is not None:
            solution = self.pending.result()
            self._install(solution, self.pending_t0, t)
            installed, converged = True, solution.converged
            warm = shift_warm_start(solution.controls)
        self.pending = pool.submit(self._solve, problem, warm)
        self.pending_t0 = t
        if self.plan is None:
            solution = self.pending.result()
            self.pending = None
            self._install(solution, t, t)
            installed, converged = True, solution.converged
        return installed, converged

    # -- compliance layer ----------------------------------------------------------

    def _arm_reference(self, ref: Reference, side: str, t: float) -> tuple[np.ndarray, np.ndarray]:
        x_d, xdot_d = ref.arms[side]
        hand = self.scenario.hand_at(t)
        if hand is not None:
            x_d = project_outside_sphere(x_d, world_to_base(self.pose, hand.position), self._hand_radius())
        return x_d, xdot_d

    def _command(self, t: float, dt: float) -> tuple[ControlInput, dict[str, np.ndarray]]:
        """One compliance tick; returns the applied control and the next joint vectors."""
        s, profile, pose = self.settings, self.profile, self.pose
        ref = self.plan.reference(t)

        gains = profile.base_gains
        F = virtual_force(ref.base_xy, ref.base_vel, pose.position, self.base_vel, gains)
        self.adm["base"] = admittance_update(self.adm["base"], ref.base_xy, ref.base_vel, F, gains, dt)
        goal = self.scenario.goal
        goal_distance = math.hypot(goal.x - pose.x, goal.y - pose.y)
        v_c, omega_c = base_command(
            pose, ref.theta, self.adm["base"], gains, goal_distance, goal.theta, omega_ff=ref.omega
        )
        omega_r, omega_l = wheel_speeds(v_c, omega_c, self.geometry)
        v, omega = body_twist(omega_r, omega_l, self.geometry)
        v = float(np.clip(v, -profile.v_max, profile.v_max))
        omega = float(np.clip(omega, -profile.omega_max, profile.omega_max))

        gains = profile.arm_gains
        for side in SIDES:
            x_d, xdot_d = self._arm_reference(ref, side, t)
            F = virtual_force(x_d, xdot_d, self.ee[side], self.ee_vel[side], gains)
            self.adm[side] = admittance_update(self.adm[side], x_d, xdot_d, F, gains, dt)
        separated = separate_end_effectors(self.adm["left"].position, self.adm["right"].position, profile.d_safe)

        hand = self.scenario.hand_at(t)
        q_next, ee_vel = {}, {}
        for side, p_c in zip(SIDES, separated):
            if hand is not None:
                p_c = project_outside_sphere(p_c, world_to_base(pose, hand.position), self._hand_radius())
            self.adm[side] = AdmittanceState(tuple(p_c), self.adm[side].xdot_c)
            chain, q = self.chains[side], self.q[side]
            xdot_cmd = self.adm[side].velocity + s.ik_feedback_gain * (p_c - self.ee[side])
            xdot_cmd = np.clip(xdot_cmd, -profile.pdot_max, profile.pdot_max)
            qdot = dls_ik(chain, q, xdot_cmd, s.ik_damping)
            q_next[side] = integrate_joint_command(q, qdot, dt, chain)
            ee_vel[side] = (chain.forward(q_next[side]) - self.ee[side]) / dt

        u = ControlInput(v, omega, tuple(ee_vel["left"]), tuple(ee_vel["right"]))
        return u, q_next

    def _commit(self, u: ControlInput, q_next: dict[str, np.ndarray], dt: float) -> None:
        theta = self.pose.theta
        self.pose = step_base(self.pose, u.v, u.omega, dt)
        self.base_vel = u.v * np.array([math.cos(theta), math.sin(theta)])
        for side, pdot in zip(SIDES, (u.pdot_left, u.pdot_right)):
            self.q[side] = q_next[side]
            self.ee[side] = self.chains[side].forward(q_next[side])
            self.ee_vel[side] = np.array(pdot)
        self.u_prev = u

    # -- bookkeeping ---------------------------------------------------------------

    def _errors(self) -> dict[str, float]:
        goal = self.scenario.goal
        return {
            "position": math.hypot(goal.x - self.pose.x, goal.y - self.pose.y),
            "heading": abs(wrap_angle(self.pose.theta - goal.theta)),
            "left": float(np.linalg.norm(self.ee["left"] - np.array(self.scenario.arm_goals["left"]))),
            "right": float(np.linalg.norm(self.ee["right"] - np.array(self.scenario.arm_goals["right"]))),
        }

    def _at_goal(self, errors: dict[str, float], t: float) -> bool:
        s = self.settings
        return (
            errors["position"] <= s.goal_position_tolerance
            and errors["heading"] <= math.radians(s.goal_heading_tolerance_deg)
            and max(errors["left"], errors["right"]) <= s.arm_tolerance
            and not self.scenario.hand_pending(t)
        )

    def _record(self, t, u: ControlInput, errors, solved: bool, converged: bool) -> TickRecord:
        pose, scenario = self.pose, self.scenario
        near, human_distance = detect_human_proximity(pose, scenario.humans, t, self.settings.human_trigger_distance)
        hand = scenario.hand_at(t)
        if hand is None:
            hand_distance = math.inf
        else:
            hand_distance = min(
                float(np.linalg.norm(ee_world(pose, self.ee[side]) - np.array(hand.position))) for side in SIDES
            )
        clearance = min((o.clearance((pose.x, pose.y)) for o in scenario.obstacles_at(t)), default=math.inf)
        sigma = min(min_singular_value(self.chains[side], self.q[side]) for side in SIDES)
        left, right = self.ee["left"], self.ee["right"]
        return TickRecord(
            t, pose.x, pose.y, pose.theta,
            float(left[0]), float(left[1]), float(left[2]),
            float(right[0]), float(right[1]), float(right[2]),
            u.v, u.omega, *u.pdot_left, *u.pdot_right,
            self.profile.name, near, human_distance, hand is not None, hand_distance, clearance,
            errors["position"], errors["heading"], errors["left"], errors["right"],
            sigma, solved, converged,
        )

    # -- main loop -----------------------------------------------------------------

    def run(self, scenario: Scenario) -> RunLog:
        s = self.settings
        self._reset(scenario)
        dt = s.control_dt
        last_tick = int(math.floor(scenario.duration_limit / dt + 1e-9))
        log = RunLog(scenario.name, nominal_v_max=PLATFORM_V_MAX, position_tolerance=s.goal_position_tolerance)
        logger.info(f"Running scenario '{scenario.name}' ({'threaded' if self.threaded else 'single-threaded'})")

        pool = ThreadPoolExecutor(max_workers=1) if self.threaded else None
        try:
            for k in range(last_tick + 1):
                t = k * dt
                self._update_engagement(t)
                scene = build_scene(
                    scenario, self.pose, t, s.human_trigger_distance, self.weights.rho0, engaged=self.human_engaged
                )
                errors = self._errors()
                if k == last_tick or self._at_goal(errors, t):
                    if self.profile is None:
                        self._select_profile(scene, t)
                    log.ticks.append(self._record(t, ControlInput(), errors, False, False))
                    log.final_scene = scene
                    break

                hazard = (scene.human_present, scene.hand_in_workspace)
                solved = converged = False
                if k % s.replan_every_ticks == 0 or hazard != self.hazard:
                    self._select_profile(scene, t)
                    self.hazard = hazard
                    solved, converged = self._replan(t, pool)
                u, q_next = self._command(t, dt)
                log.ticks.append(self._record(t, u, errors, solved, converged))
                self._commit(u, q_next, dt)
        finally:
            if pool is not None:
                pool.shutdown(wait=True)

        log.final_profile = self.profile
        final = log.ticks[-1]
        reason = "goal reached" if self._at_goal(self._errors(), final.t) else "duration limit"
        logger.info(
            f"Scenario '{scenario.name}' ended at t={final.t:.2f}s ({reason}): "
            f"position error {final.position_error * 1000:.2f} mm, "
            f"heading error {math.degrees(final.heading_error):.2f} deg"
        )
        return log


def run_scenario(
    scenario: Scenario,
    settings: Optional[Settings] = None,
    store: Optional[EpisodeStore] = None,
    threaded: bool = False,
) -> RunLog:
    return Simulator(settings, store, threaded=threaded).run(scenario)


def episode_from_run(log: RunLog, metrics: RunMetrics, success: bool, name: Optional[str] = None) -> Episode:
    """Episode for write-back: final scene, the profile active at the end, the outcome."""
    return Episode(
        name=name or f"{log.scenario}-run",
        scene=log.final_scene,
        profile=log.final_profile,
        outcome=EpisodeOutcome(metrics.position_error, metrics.heading_error, success),
    )
