"""Resolved-rate control laws with task-priority redundancy resolution.

Four step laws on the 9-actuator arm:

* conventional resolved rate on the stacked 6-D pose error,
* position control with joint-limit avoidance in the position null space,
* orientation control with joint-limit avoidance (mirror of the above),
* the full three-task law: position, then orientation projected into the
  position null space, then joint-limit avoidance in the remaining null
  space, each with its own gain and an error-norm-scheduled joint-limit
  gain that switches off near the goal.

``solve`` iterates a step law in closed loop against a plant, reading the
current pose from plant feedback rather than from the kinematic model.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .geometry import JointLimits, LIMIT_MARGIN, RobotGeometry, as_actuator_vector
from .jacobian import SV_TOL, jacobian, pinv
from .kinematics import Pose, forward_kinematics
from .rotations import matrix_to_rotvec


@dataclass(frozen=True)
class TaskError:
    """Position error (m) and principal axis-angle orientation error (rad),
    both expressed in the base frame."""

    e_p: np.ndarray
    e_zeta: np.ndarray

    @property
    def position_norm(self) -> float:
        return float(np.linalg.norm(self.e_p))

    @property
    def orientation_norm(self) -> float:
        return float(np.linalg.norm(self.e_zeta))

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.e_p, self.e_zeta])


def pose_error(desired: Pose, current: Pose) -> TaskError:
    """Base-frame task error: e_p = p_d - p_c, e_zeta = axis-angle of
    R_d R_c^T (consistent with the spatial angular Jacobian)."""
    e_p = desired.position - current.position
    e_zeta = matrix_to_rotvec(desired.rotation @ current.rotation.T)
    return TaskError(e_p=e_p, e_zeta=e_zeta)


@dataclass(frozen=True)
class JointLimitSchedule:
    """Error-norm-scheduled joint-limit gain.

    ``value_far`` applies while the scheduling error norm exceeds
    ``switch_threshold``; within it the gain is 0, cancelling the
    avoidance term near the goal. Negative values descend the cost.
    """

    value_far: float
    switch_threshold: float
    threshold_metric: str = "position"  # "position" (m) or "orientation" (rad)
    value_near: float = 0.0

    def __post_init__(self):
        if self.threshold_metric not in ("position", "orientation"):
            raise ValueError("threshold_metric must be 'position' or 'orientation'")
        if self.value_near != 0.0:
            raise ValueError("value_near must be 0 (avoidance cancels near the goal)")

    def gamma(self, error: TaskError) -> float:
        norm = (error.position_norm if self.threshold_metric == "position"
                else error.orientation_norm)
        return self.value_far if norm > self.switch_threshold else self.value_near


@dataclass(frozen=True)
class GainSchedule:
    """Step gain plus the secondary-task gains of the redundancy laws.

    ``gamma_position`` and ``gamma_orientation`` weight the position and
    orientation terms of the three-task law; ``joint_limit`` schedules the
    avoidance gain (None disables the term entirely).
    """

    alpha: float
    gamma_position: float = 1.0
    gamma_orientation: float = 0.0
    joint_limit: JointLimitSchedule | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def gamma_jl(self, error: TaskError) -> float:
        return 0.0 if self.joint_limit is None else self.joint_limit.gamma(error)


def gains_position_default() -> GainSchedule:
    """Published tuning for position control with joint-limit avoidance."""
    return GainSchedule(
        alpha=0.074,
        joint_limit=JointLimitSchedule(value_far=-0.01, switch_threshold=0.030),
    )


def gains_orientation_default() -> GainSchedule:
    """Published tuning for orientation control with joint-limit avoidance."""
    return GainSchedule(
        alpha=0.05,
        joint_limit=JointLimitSchedule(
            value_far=-0.005,
            switch_threshold=np.deg2rad(30.0),
            threshold_metric="orientation",
        ),
    )


def gains_full_default() -> GainSchedule:
    """Published tuning for the scheduled three-task law."""
    return GainSchedule(
        alpha=0.05,
        gamma_position=1.0,
        gamma_orientation=0.1,
        joint_limit=JointLimitSchedule(value_far=-5e-5, switch_threshold=0.050),
    )


class ControllerMode(enum.Enum):
    ConventionalRR = "ConventionalRR"
    PositionWithJL = "PositionWithJL"
    OrientationWithJL = "OrientationWithJL"
    PosOriPriority = "PosOriPriority"
    FullThreeTask = "FullThreeTask"


@dataclass(frozen=True)
class ControllerConfig:
    geometry: RobotGeometry
    joint_limits: JointLimits
    mode: ControllerMode
    dt: float = 0.05                          # s, matches the plant loop rate
    position_tolerance: float = 0.8e-3        # m
    orientation_tolerance: float = np.deg2rad(0.6)  # rad
    max_iterations: int = 3000
    sv_tol: float = SV_TOL
    # Orientation components counted toward the tolerance check (None = all);
    # schedules and step laws always use the full error.
    orientation_error_axes: tuple | None = None
    divergence_factor: float = 10.0
    divergence_window: int = 50

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (self.position_tolerance > 0 and self.orientation_tolerance > 0):
            raise ValueError("tolerances must be positive")


def jl_cost(q, limits: JointLimits) -> float:
    """Barrier-style joint-limit cost: minimal (value 1 per actuator) at the
    range midpoints, divergent at the bounds. Inputs are clamped to the
    margin-shrunk open box so the cost stays finite for infeasible q."""
    q = limits.clamp_interior(q, LIMIT_MARGIN)
    rng = limits.upper - limits.lower
    return float(np.sum(0.25 * rng**2 / ((limits.upper - q) * (q - limits.lower))))


def jl_gradient(q, limits: JointLimits) -> np.ndarray:
    """Analytic elementwise gradient of :func:`jl_cost` (same clamping)."""
    q = limits.clamp_interior(q, LIMIT_MARGIN)
    rng = limits.upper - limits.lower
    num = 0.25 * rng**2 * (2.0 * q - limits.lower - limits.upper)
    den = (limits.upper - q) ** 2 * (q - limits.lower) ** 2
    return num / den


def _current_pose(q, cfg: ControllerConfig, current: Pose | None) -> Pose:
    return current if current is not None else forward_kinematics(q, cfg.geometry)


def step_conventional(q, desired: Pose, gains: GainSchedule, cfg: ControllerConfig,
                      current: Pose | None = None) -> np.ndarray:
    """One conventional resolved-rate step on the stacked 6-D pose error.

    No joint-limit handling and no feasibility clamp: infeasible updates
    (negative elongation, hence negative commanded pressure) are returned
    as-is so the caller can flag them.
    """
    q = as_actuator_vector(q)
    e = pose_error(desired, _current_pose(q, cfg, current))
    J = jacobian(q, cfg.geometry).J
    return q + gains.alpha * pinv(J, cfg.sv_tol) @ e.stacked


def step_position_jl(q, desired_position, gains: GainSchedule, cfg: ControllerConfig,
                     current: Pose | None = None) -> np.ndarray:
    """Position task with scheduled joint-limit avoidance in its null space."""
    q = as_actuator_vector(q)
    pose = _current_pose(q, cfg, current)
    e = TaskError(e_p=np.asarray(desired_position, dtype=float) - pose.position,
                  e_zeta=np.zeros(3))
    Jv = jacobian(q, cfg.geometry).Jv
    Jv_pinv = pinv(Jv, cfg.sv_tol)
    qdot = Jv_pinv @ e.e_p
    gamma = gains.gamma_jl(e)
    if gamma != 0.0:
        P = np.eye(q.size) - Jv_pinv @ Jv
        qdot = qdot + gamma * P @ jl_gradient(q, cfg.joint_limits)
    return q + gains.alpha * qdot


def step_orientation_jl(q, desired_rotation, gains: GainSchedule, cfg: ControllerConfig,
                        current: Pose | None = None) -> np.ndarray:
    """Orientation task with scheduled joint-limit avoidance in its null space."""
    q = as_actuator_vector(q)
    pose = _current_pose(q, cfg, current)
    e_zeta = matrix_to_rotvec(np.asarray(desired_rotation, dtype=float) @ pose.rotation.T)
    e = TaskError(e_p=np.zeros(3), e_zeta=e_zeta)
    Jw = jacobian(q, cfg.geometry).Jw
    Jw_pinv = pinv(Jw, cfg.sv_tol)
    qdot = Jw_pinv @ e.e_zeta
    gamma = gains.gamma_jl(e)
    if gamma != 0.0:
        P = np.eye(q.size) - Jw_pinv @ Jw
        qdot = qdot + gamma * P @ jl_gradient(q, cfg.joint_limits)
    return q + gains.alpha * qdot


def step_full(q, desired: Pose, gains: GainSchedule, cfg: ControllerConfig,
              current: Pose | None = None, force_gamma_jl: float | None = None) -> np.ndarray:
    """One step of the scheduled three-task law.

    Position leads; the orientation task acts through J~ = Jw (I - Jv+ Jv)
    so it cannot disturb the commanded position rate; joint-limit descent
    is projected into the null space of both.
    """
    q = as_actuator_vector(q)
    pose = _current_pose(q, cfg, current)
    e = pose_error(desired, pose)
    jac = jacobian(q, cfg.geometry)
    Jv_pinv = pinv(jac.Jv, cfg.sv_tol)
    P_v = np.eye(q.size) - Jv_pinv @ jac.Jv
    Jt = jac.Jw @ P_v
    Jt_pinv = pinv(Jt, cfg.sv_tol)

    qdot = gains.gamma_position * (Jv_pinv @ e.e_p)
    qdot = qdot + gains.gamma_orientation * (
        Jt_pinv @ (e.e_zeta - jac.Jw @ Jv_pinv @ e.e_p))
    gamma = gains.gamma_jl(e) if force_gamma_jl is None else force_gamma_jl
    if gamma != 0.0:
        P = P_v - Jt_pinv @ Jt
        qdot = qdot + gamma * P @ jl_gradient(q, cfg.joint_limits)
    return q + gains.alpha * qdot


def _step(q, desired: Pose, gains: GainSchedule, cfg: ControllerConfig,
          current: Pose | None) -> np.ndarray:
    mode = cfg.mode
    if mode is ControllerMode.ConventionalRR:
        return step_conventional(q, desired, gains, cfg, current)
    if mode is ControllerMode.PositionWithJL:
        return step_position_jl(q, desired.position, gains, cfg, current)
    if mode is ControllerMode.OrientationWithJL:
        return step_orientation_jl(q, desired.rotation, gains, cfg, current)
    if mode is ControllerMode.PosOriPriority:
        # Two-task special case of the three-task law: joint-limit gain 0.
        return step_full(q, desired, gains, cfg, current, force_gamma_jl=0.0)
    if mode is ControllerMode.FullThreeTask:
        return step_full(q, desired, gains, cfg, current)
    raise ValueError(f"unknown controller mode {mode}")


class DivergenceDetected(Exception):
    """Raised by ``solve`` on sustained error growth; carries the trajectory."""

    def __init__(self, trajectory: "Trajectory"):
        super().__init__("controller diverged")
        self.trajectory = trajectory


@dataclass
class Trajectory:
    """Per-step record of a closed-loop solve. Row 0 is the initial state."""

    mode: str
    qs: np.ndarray = field(default_factory=lambda: np.empty((0, 9)))
    pressures: np.ndarray = field(default_factory=lambda: np.empty((0, 9)))
    positions: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    rotvecs: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    err_pos: np.ndarray = field(default_factory=lambda: np.empty(0))
    err_rot: np.ndarray = field(default_factory=lambda: np.empty(0))
    err_pos_true: np.ndarray = field(default_factory=lambda: np.empty(0))
    err_rot_true: np.ndarray = field(default_factory=lambda: np.empty(0))
    infeasible: np.ndarray = field(default_factory=lambda: np.empty((0, 9), dtype=bool))
    converged: bool = False
    diverged: bool = False

    @property
    def iterations_used(self) -> int:
        return self.qs.shape[0] - 1

    @property
    def any_infeasible(self) -> bool:
        return bool(self.infeasible.any())


def _tolerance_met(e: TaskError, cfg: ControllerConfig) -> bool:
    mode = cfg.mode
    if mode is ControllerMode.PositionWithJL:
        return e.position_norm <= cfg.position_tolerance
    if mode is ControllerMode.OrientationWithJL:
        return e.orientation_norm <= cfg.orientation_tolerance
    e_rot = e.e_zeta
    if cfg.orientation_error_axes is not None:
        e_rot = e_rot[list(cfg.orientation_error_axes)]
    return (e.position_norm <= cfg.position_tolerance
            and float(np.linalg.norm(e_rot)) <= cfg.orientation_tolerance)


def _divergence_ratio(e: TaskError, e0: TaskError, cfg: ControllerConfig) -> float:
    ratios = []
    if cfg.mode is not ControllerMode.OrientationWithJL and e0.position_norm > 1e-12:
        ratios.append(e.position_norm / e0.position_norm)
    if cfg.mode is not ControllerMode.PositionWithJL and e0.orientation_norm > 1e-12:
        ratios.append(e.orientation_norm / e0.orientation_norm)
    return max(ratios) if ratios else 0.0


def solve(q0, desired: Pose, gains: GainSchedule, cfg: ControllerConfig, plant) -> Trajectory:
    """Run the configured step law in closed loop until the error tolerance,
    the iteration budget, or sustained divergence.

    ``plant`` supplies the feedback pose: any object with ``reset(q0)`` and
    ``apply_command(q)`` returning observations with ``pose_filtered``,
    ``pressures`` and ``infeasible_flags`` (see :mod:`softarm.plant`).
    Raises DivergenceDetected (trajectory attached) when the tracked error
    norm stays above ``divergence_factor`` times its initial value for
    ``divergence_window`` consecutive steps.
    """
    q = as_actuator_vector(q0).copy()
    obs = plant.reset(q)

    rows = {k: [] for k in ("q", "press", "pos", "rot", "ep", "er", "ept", "ert", "flags")}

    def record(q_now, observation):
        e = pose_error(desired, observation.pose_filtered)
        rows["q"].append(q_now.copy())
        rows["press"].append(np.asarray(observation.pressures))
        rows["pos"].append(observation.pose_filtered.position.copy())
        rows["rot"].append(matrix_to_rotvec(observation.pose_filtered.rotation))
        rows["ep"].append(e.position_norm)
        rows["er"].append(e.orientation_norm)
        true_pose = plant.true_pose() if hasattr(plant, "true_pose") else observation.pose_filtered
        e_true = pose_error(desired, true_pose)
        rows["ept"].append(e_true.position_norm)
        rows["ert"].append(e_true.orientation_norm)
        rows["flags"].append(np.asarray(observation.infeasible_flags, dtype=bool))
        return e

    def finish(converged, diverged):
        return Trajectory(
            mode=cfg.mode.value,
            qs=np.array(rows["q"]),
            pressures=np.array(rows["press"]),
            positions=np.array(rows["pos"]),
            rotvecs=np.array(rows["rot"]),
            err_pos=np.array(rows["ep"]),
            err_rot=np.array(rows["er"]),
            err_pos_true=np.array(rows["ept"]),
            err_rot_true=np.array(rows["ert"]),
            infeasible=np.array(rows["flags"], dtype=bool),
            converged=converged,
            diverged=diverged,
        )

    e = record(q, obs)
    e0 = e
    growth_streak = 0
    for _ in range(cfg.max_iterations):
        if _tolerance_met(e, cfg):
            return finish(converged=True, diverged=False)
        q = _step(q, desired, gains, cfg, obs.pose_filtered)
        obs = plant.apply_command(q)
        e = record(q, obs)
        if _divergence_ratio(e, e0, cfg) > cfg.divergence_factor:
            growth_streak += 1
            if growth_streak >= cfg.divergence_window:
                raise DivergenceDetected(finish(converged=False, diverged=True))
        else:
            growth_streak = 0
    return finish(converged=_tolerance_met(e, cfg), diverged=False)
