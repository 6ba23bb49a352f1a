"""Simulated arm standing in for the physical hardware.

Quasi-static: a commanded elongation is scaled by a per-actuator mismatch
factor, saturated to the physical range, and pushed through the true
forward kinematics. The measured pose gets additive seeded noise and a
first-order low-pass (matching the 10 rad/s filter applied to the camera
pose stream). Commands outside the feasible elongation range are accepted
but flagged, so controllers without joint-limit handling reproduce the
infeasible negative-pressure behavior.
"""

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    N_ACTUATORS,
    RobotGeometry,
    as_actuator_vector,
    default_geometry,
    elongation_to_pressure,
)
from .kinematics import Pose, forward_kinematics
from .rotations import matrix_to_rotvec, rotvec_to_matrix


@dataclass(frozen=True)
class PlantConfig:
    true_geometry: RobotGeometry = field(default_factory=default_geometry)
    # Multiplicative elongation mismatch per actuator (0 = perfect model).
    length_scale_error: np.ndarray = field(default_factory=lambda: np.zeros(N_ACTUATORS))
    position_noise_std: float = 0.0   # m
    rotation_noise_std: float = 0.0   # rad
    filter_cutoff: float = 10.0       # rad/s
    dt: float = 0.05                  # s
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "length_scale_error",
            np.broadcast_to(np.asarray(self.length_scale_error, dtype=float),
                            (N_ACTUATORS,)).copy())
        if not self.filter_cutoff > 0:
            raise ValueError("filter_cutoff must be positive")
        if self.position_noise_std < 0 or self.rotation_noise_std < 0:
            raise ValueError("noise std must be non-negative")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @staticmethod
    def with_uniform_mismatch(magnitude: float, seed: int, **kwargs) -> "PlantConfig":
        """Per-actuator mismatch drawn uniformly from [-magnitude, magnitude]."""
        rng = np.random.default_rng(seed)
        scale = rng.uniform(-magnitude, magnitude, N_ACTUATORS)
        return PlantConfig(length_scale_error=scale, rng_seed=seed, **kwargs)


@dataclass(frozen=True)
class PlantObservation:
    pose_filtered: Pose
    pose_raw: Pose
    pressures: np.ndarray         # psi, from the command (can be negative)
    infeasible_flags: np.ndarray  # per actuator: command outside [0, l_max]


class LowPassFilter:
    """First-order low-pass with unit DC gain, discretized step-invariantly:
    y_k = y_{k-1} + a (x_k - y_{k-1}), a = 1 - exp(-cutoff * dt)."""

    def __init__(self, cutoff: float, dt: float):
        self.alpha = 1.0 - np.exp(-cutoff * dt)
        self.state = None

    def reset(self, value) -> np.ndarray:
        self.state = np.asarray(value, dtype=float).copy()
        return self.state

    def update(self, value) -> np.ndarray:
        value = np.asarray(value, dtype=float)
        if self.state is None:
            return self.reset(value)
        self.state = self.state + self.alpha * (value - self.state)
        return self.state


class Plant:
    """Single-owner mutable simulation of the arm; one instance per run."""

    def __init__(self, config: PlantConfig | None = None):
        self.config = config or PlantConfig()
        self._limits = self.config.true_geometry.joint_limits()
        self._rng = np.random.default_rng(self.config.rng_seed)
        self._pos_filter = LowPassFilter(self.config.filter_cutoff, self.config.dt)
        self._rot_filtered = None
        self._true_elongation = np.zeros(N_ACTUATORS)

    def reset(self, q0) -> PlantObservation:
        """Re-seed the RNG, drive the plant to q0, and start the filters at
        the first measured pose (no startup transient)."""
        self._rng = np.random.default_rng(self.config.rng_seed)
        self._pos_filter.state = None
        self._rot_filtered = None
        return self.apply_command(q0)

    def true_pose(self) -> Pose:
        """Noise-free pose of the physical arm (simulation ground truth)."""
        return forward_kinematics(self._true_elongation, self.config.true_geometry)

    def apply_command(self, q_cmd) -> PlantObservation:
        q_cmd = as_actuator_vector(q_cmd)
        flags = (q_cmd < self._limits.lower) | (q_cmd > self._limits.upper)
        pressures = elongation_to_pressure(q_cmd)

        actual = q_cmd * (1.0 + self.config.length_scale_error)
        self._true_elongation = np.clip(actual, self._limits.lower, self._limits.upper)
        pose_true = self.true_pose()

        position_raw = pose_true.position
        rotation_raw = pose_true.rotation
        if self.config.position_noise_std > 0:
            position_raw = position_raw + self._rng.normal(
                0.0, self.config.position_noise_std, 3)
        if self.config.rotation_noise_std > 0:
            wobble = self._rng.normal(0.0, self.config.rotation_noise_std, 3)
            rotation_raw = rotvec_to_matrix(wobble) @ rotation_raw
        pose_raw = Pose(position_raw, rotation_raw)

        position_f = self._pos_filter.update(position_raw)
        if self._rot_filtered is None:
            self._rot_filtered = rotation_raw
        else:
            # Filter the incremental axis-angle so the state stays a rotation.
            increment = matrix_to_rotvec(rotation_raw @ self._rot_filtered.T)
            self._rot_filtered = (
                rotvec_to_matrix(self._pos_filter.alpha * increment) @ self._rot_filtered)
        pose_filtered = Pose(position_f, self._rot_filtered)

        return PlantObservation(
            pose_filtered=pose_filtered,
            pose_raw=pose_raw,
            pressures=pressures,
            infeasible_flags=flags,
        )
