"""Staged harvesting state machine: initial placement, fine positioning,
grasp, return home.

Stage transitions are one-way latches on end-effector-to-berry distance:
6 cm hands the berry feedback from the eye-to-hand camera to the
eye-in-hand chain, 2 cm triggers the grasp. The berry estimate always
falls back to the most recent fix while the active camera is occluded.
"""

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .controller import (
    ControllerConfig,
    ControllerMode,
    GainSchedule,
    _step,
    gains_full_default,
)
from .kinematics import Pose
from .rotations import matrix_to_rotvec
from .vision import (
    BerryTarget,
    FrameRegistry,
    berry_to_base,
    cam1_target_to_base,
    simulate_observation,
)


class HarvestState(enum.Enum):
    InitialPlacement = "InitialPlacement"
    FinePositioning = "FinePositioning"
    Grasp = "Grasp"
    ReturnHome = "ReturnHome"
    Done = "Done"
    Failed = "Failed"


class StageTimeout(Exception):
    def __init__(self, stage: HarvestState):
        super().__init__(f"stage {stage.value} exceeded its iteration budget")
        self.stage = stage


class Gripper:
    """Stub for the tendon-driven gripper: a logged open/close toggle."""

    def __init__(self):
        self.state = "open"
        self.events = []

    def command(self, action: str, iteration: int) -> str:
        if action not in ("open", "close"):
            raise ValueError("gripper action must be 'open' or 'close'")
        self.state = "open" if action == "open" else "closed"
        self.events.append((iteration, action))
        return self.state


@dataclass(frozen=True)
class StagePolicy:
    mode: ControllerMode
    gains: GainSchedule
    max_iterations: int


def _default_home_q() -> np.ndarray:
    # Mid-range (far from both actuator bounds, where the avoidance cost is
    # flat), slightly asymmetric so the posture is off the straight
    # singularity.
    return np.tile([0.051, 0.050, 0.049], 3)


@dataclass(frozen=True)
class WorkflowConfig:
    controller: ControllerConfig
    coarse_threshold: float = 0.06   # m, C1 -> C2 feedback handover
    grasp_threshold: float = 0.02    # m, gripper workspace radius
    # Pre-grasp offset in the approach frame; -Z backs off along the
    # gripper approach axis.
    standoff_offset: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 0.0, -0.05]))
    home_q: np.ndarray = field(default_factory=_default_home_q)
    placement: StagePolicy = field(default_factory=lambda: StagePolicy(
        ControllerMode.FullThreeTask, gains_full_default(), 2000))
    # The fine stage starts inside the coarse threshold, i.e. in the
    # near-goal regime where the avoidance schedule is off; it runs the
    # plain position law.
    fine: StagePolicy = field(default_factory=lambda: StagePolicy(
        ControllerMode.PositionWithJL, GainSchedule(alpha=0.074), 1000))
    home_iterations: int = 100
    observation_noise_std: float = 0.0
    # Forced C1 berry dropout (global iteration start, length); None disables.
    c1_occlusion_window: tuple | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if not self.grasp_threshold < self.coarse_threshold:
            raise ValueError("grasp_threshold must be below coarse_threshold")


@dataclass
class HarvestRow:
    iteration: int
    stage: str
    q: np.ndarray
    pressures: np.ndarray
    position: np.ndarray
    rotvec: np.ndarray
    dist_est: float
    dist_true: float
    infeasible: np.ndarray
    target_source: str


@dataclass
class StageRecord:
    stage: str
    start_iteration: int
    end_iteration: int
    outcome: str
    final_dist_est: float
    final_dist_true: float


@dataclass
class HarvestLog:
    rows: list = field(default_factory=list)
    stages: list = field(default_factory=list)
    gripper_events: list = field(default_factory=list)
    final_state: HarvestState = HarvestState.Failed
    failure_reason: str | None = None
    grasp_success: bool = False

    @property
    def stage_names(self) -> list:
        return [s.stage for s in self.stages]


def run_harvest(berry_base_truth, desired_approach_orientation, plant,
                registry: FrameRegistry, cfg: WorkflowConfig) -> HarvestLog:
    """Execute one harvesting attempt against a simulated plant.

    The berry is fixed in the base frame; ``desired_approach_orientation``
    is the gripper rotation whose +Z axis points at the berry. Returns the
    complete per-stage log; failures (timeouts, divergence, missed grasp)
    are recorded rather than raised.
    """
    berry_truth = np.asarray(berry_base_truth, dtype=float)
    approach = np.asarray(desired_approach_orientation, dtype=float)
    log = HarvestLog()
    gripper = Gripper()
    rng = np.random.default_rng(cfg.rng_seed)

    obs = plant.reset(cfg.home_q)
    q = np.asarray(cfg.home_q, dtype=float).copy()
    target = None
    iteration = 0

    def c1_forced(it: int) -> bool:
        if cfg.c1_occlusion_window is None:
            return False
        start, length = cfg.c1_occlusion_window
        return start <= it < start + length

    def observe(it: int) -> BerryTarget:
        return simulate_observation(
            berry_truth, plant.true_pose(), registry,
            noise_std=cfg.observation_noise_std, rng=rng,
            force_c1_occluded=c1_forced(it), previous=target)

    def record(stage: HarvestState, berry_est, source: str):
        pose = obs.pose_filtered
        log.rows.append(HarvestRow(
            iteration=iteration,
            stage=stage.value,
            q=q.copy(),
            pressures=np.asarray(obs.pressures),
            position=pose.position.copy(),
            rotvec=matrix_to_rotvec(pose.rotation),
            dist_est=float(np.linalg.norm(pose.position - berry_est)),
            dist_true=float(np.linalg.norm(plant.true_pose().position - berry_truth)),
            infeasible=np.asarray(obs.infeasible_flags, dtype=bool),
            target_source=source,
        ))

    def close_stage(stage: HarvestState, start: int, outcome: str):
        last = log.rows[-1]
        log.stages.append(StageRecord(
            stage=stage.value, start_iteration=start, end_iteration=iteration,
            outcome=outcome, final_dist_est=last.dist_est, final_dist_true=last.dist_true))

    def fail(reason: str):
        log.final_state = HarvestState.Failed
        log.failure_reason = reason
        log.gripper_events = gripper.events
        return log

    # Stage 1: initial placement on the standoff pose, berry from C1.
    stage = HarvestState.InitialPlacement
    stage_start = iteration
    policy = cfg.placement
    ctrl_cfg = replace(cfg.controller, mode=policy.mode)
    initial_dist = None
    growth_streak = 0
    while True:
        target = observe(iteration)
        try:
            berry_est = cam1_target_to_base(target, registry)
        except Exception as exc:
            return fail(f"{stage.value}: {exc}")
        source = "c1" if target.position_c1 is not None else "c1_held"
        record(stage, berry_est, source)
        dist = log.rows[-1].dist_est
        if initial_dist is None:
            initial_dist = dist
        if dist <= cfg.coarse_threshold:
            close_stage(stage, stage_start, "reached")
            break
        if iteration - stage_start >= policy.max_iterations:
            close_stage(stage, stage_start, "timeout")
            return fail(f"StageTimeout({stage.value})")
        if dist > 10.0 * initial_dist:
            growth_streak += 1
            if growth_streak >= 50:
                close_stage(stage, stage_start, "diverged")
                return fail(f"{stage.value}: diverged")
        else:
            growth_streak = 0
        desired = Pose(berry_est + approach @ cfg.standoff_offset, approach)
        q = _step(q, desired, policy.gains, ctrl_cfg, obs.pose_filtered)
        obs = plant.apply_command(q)
        iteration += 1

    # Stage 2: fine positioning on the berry itself, berry from C2 chained
    # through the measured end-effector pose; orientation stays frozen.
    stage = HarvestState.FinePositioning
    stage_start = iteration
    policy = cfg.fine
    ctrl_cfg = replace(cfg.controller, mode=policy.mode)
    while True:
        target = observe(iteration)
        ee_in_cam1 = registry.base_in_cam1.compose(obs.pose_filtered)
        try:
            berry_est = berry_to_base(target, ee_in_cam1, registry)
        except Exception as exc:
            return fail(f"{stage.value}: {exc}")
        source = "c2" if target.position_c2 is not None else "c2_held"
        record(stage, berry_est, source)
        if log.rows[-1].dist_est <= cfg.grasp_threshold:
            close_stage(stage, stage_start, "reached")
            break
        if iteration - stage_start >= policy.max_iterations:
            close_stage(stage, stage_start, "timeout")
            return fail(f"StageTimeout({stage.value})")
        desired = Pose(berry_est, obs.pose_filtered.rotation)
        q = _step(q, desired, policy.gains, ctrl_cfg, obs.pose_filtered)
        obs = plant.apply_command(q)
        iteration += 1

    # Stage 3: grasp. Success judged on the true gripper-to-berry distance.
    stage = HarvestState.Grasp
    stage_start = iteration
    gripper.command("close", iteration)
    berry_est = target.last_known_base
    record(stage, berry_est, log.rows[-1].target_source)
    grasped = log.rows[-1].dist_true <= cfg.grasp_threshold
    log.grasp_success = grasped
    close_stage(stage, stage_start, "grasped" if grasped else "missed")
    if not grasped:
        return fail("Grasp: berry outside gripper workspace")

    # Stage 4: open-loop joint-space return to the home posture.
    stage = HarvestState.ReturnHome
    stage_start = iteration
    q_from = q.copy()
    home = np.asarray(cfg.home_q, dtype=float)
    for k in range(1, cfg.home_iterations + 1):
        q = q_from + (k / cfg.home_iterations) * (home - q_from)
        obs = plant.apply_command(q)
        iteration += 1
        record(stage, berry_est, "none")
    gripper.command("open", iteration)
    close_stage(stage, stage_start, "home")

    log.final_state = HarvestState.Done
    log.gripper_events = gripper.events
    return log
