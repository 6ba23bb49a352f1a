"""Piecewise-constant-curvature kinematics of the 3-section arm.

Two maps per section: actuator elongations -> arc parameters, and arc
parameters -> rigid transform of the section end plate. The end-effector
pose chains the three section transforms with the rigid plate offsets.
"""

import math
from dataclasses import dataclass

import numpy as np

from .geometry import RobotGeometry, SectionGeometry, as_actuator_vector
from .rotations import orthonormalize, rot_z, rotation_drift

#: Below this bending measure (m) a section is treated as exactly straight.
STRAIGHT_S_THRESHOLD = 1e-9

#: Orthonormality tolerance for Pose construction.
POSE_ORTHO_TOL = 1e-9

#: FK re-orthonormalizes its rotation when drift exceeds this.
FK_DRIFT_TOL = 1e-12


@dataclass(frozen=True)
class Pose:
    """Rigid transform: position (m) and proper rotation matrix."""

    position: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        if rotation_drift(self.rotation) > POSE_ORTHO_TOL:
            raise ValueError("rotation is not orthonormal")
        if np.linalg.det(self.rotation) < 0:
            raise ValueError("rotation must be proper (det +1)")

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.eye(3))

    def compose(self, other: "Pose") -> "Pose":
        """self . other (apply ``other`` first, then ``self``)."""
        return Pose(self.position + self.rotation @ other.position,
                    self.rotation @ other.rotation)

    def inverse(self) -> "Pose":
        return Pose(-self.rotation.T @ self.position, self.rotation.T)

    def transform_point(self, p) -> np.ndarray:
        return self.position + self.rotation @ np.asarray(p, dtype=float)


@dataclass(frozen=True)
class SectionConfig:
    """Arc parameters of one section.

    ``s`` is the bending measure from the elongation differences, ``phi``
    the arc bending angle, ``lam`` the radius of curvature (inf marks the
    straight sentinel), ``theta`` the bending-plane angle from the local X
    axis, and ``arc_length`` the section centerline length.
    """

    s: float
    phi: float
    lam: float
    theta: float
    arc_length: float

    @property
    def is_straight(self) -> bool:
        return not np.isfinite(self.lam)


def actuator_to_config(lengths, section: SectionGeometry) -> SectionConfig:
    """Map the three actuator elongations of one section to arc parameters.

    The bending-plane angle uses the two-argument arctangent so the full
    [-pi, pi] range is covered. When the elongations are (near-)equal the
    arc degenerates to a straight segment; that case returns the sentinel
    (phi = 0, theta = 0, lam = inf) rather than dividing by zero.
    """
    l1, l2, l3 = (float(v) for v in lengths)
    if not (math.isfinite(l1) and math.isfinite(l2) and math.isfinite(l3)):
        raise ValueError("actuator lengths must be finite")
    arc_length = section.initial_length + (l1 + l2 + l3) / 3.0
    s = math.sqrt(max(l1 * l1 + l2 * l2 + l3 * l3 - l1 * l2 - l2 * l3 - l1 * l3, 0.0))
    if s < STRAIGHT_S_THRESHOLD:
        return SectionConfig(s=s, phi=0.0, lam=math.inf, theta=0.0, arc_length=arc_length)
    phi = 2.0 * s / (3.0 * section.radius)
    lam = (3.0 * section.initial_length + l1 + l2 + l3) * section.radius / (2.0 * s)
    theta = math.atan2(math.sqrt(3.0) * (l3 - l2), l2 + l3 - 2.0 * l1)
    return SectionConfig(s=s, phi=phi, lam=lam, theta=theta, arc_length=arc_length)


def _config_rp(config: SectionConfig):
    """Section transform as a bare (position, rotation) pair."""
    if config.is_straight:
        return np.array([0.0, 0.0, config.arc_length]), np.eye(3)
    ct, st = math.cos(config.theta), math.sin(config.theta)
    cp, sp = math.cos(config.phi), math.sin(config.phi)
    # lam*(1 - cos phi) written as 2*lam*sin^2(phi/2) to stay exact near phi=0
    sp2 = math.sin(0.5 * config.phi)
    reach = 2.0 * config.lam * sp2 * sp2
    position = np.array([ct * reach, st * reach, config.lam * sp])
    # Rot_z(theta) Rot_y(phi) Rot_z(-theta), expanded
    ct2, st2, cs = ct * ct, st * st, ct * st
    rotation = np.array([
        [ct2 * cp + st2, cs * (cp - 1.0), ct * sp],
        [cs * (cp - 1.0), st2 * cp + ct2, st * sp],
        [-ct * sp, -st * sp, cp],
    ])
    return position, rotation


def config_to_transform(config: SectionConfig) -> Pose:
    """Rigid transform of a section end plate in its base-plate frame.

    Composition Rot_z(theta) Trans_x(lam) Rot_y(phi) Trans_x(-lam)
    Rot_z(-theta), i.e. a circular arc of radius ``lam`` bent by ``phi``
    in the plane at angle ``theta``. The straight sentinel is the analytic
    limit: a pure translation by the arc length along Z.
    """
    position, rotation = _config_rp(config)
    return Pose(position, rotation)


def _fk_rp(q, geom: RobotGeometry):
    """Forward kinematics as a bare (position, rotation) pair.

    Hot path for the finite-difference Jacobian; skips Pose validation.
    """
    position = np.zeros(3)
    rotation = np.eye(3)
    for i, section in enumerate(geom.sections):
        config = actuator_to_config(q[3 * i:3 * i + 3], section)
        p, R = _config_rp(config)
        position = position + rotation @ p
        rotation = rotation @ R
        position = position + section.plate_offset_length * rotation[:, 2]
        rotation = rotation @ rot_z(section.plate_offset_angle)
    if rotation_drift(rotation) > FK_DRIFT_TOL:
        rotation = orthonormalize(rotation)
    return position, rotation


def forward_kinematics(q, geom: RobotGeometry) -> Pose:
    """End-effector pose in the base frame for actuator elongations q.

    Chains, per section: the arc transform, the rigid plate offset along
    the local Z, and the plate twist about Z. The last offset pair is the
    gripper mount.
    """
    q = as_actuator_vector(q)
    position, rotation = _fk_rp(q, geom)
    return Pose(position, rotation)
