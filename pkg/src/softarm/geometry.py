"""Static description of the 3-section, 9-actuator pneumatic arm.

Actuator ordering convention used everywhere in this package:

    q = [l_11, l_12, l_13, l_21, l_22, l_23, l_31, l_32, l_33]

where l_ij is the elongation (meters) of actuator j of section i and
sections are ordered proximal, medial, distal. Actuator states are plain
(9,) float arrays; see :func:`as_actuator_vector`.
"""

from dataclasses import dataclass, field

import numpy as np

N_SECTIONS = 3
N_ACTUATORS = 9

#: Measured pressure-to-elongation ratio of the pneumatic muscles, m/psi.
ELONGATION_PER_PSI = 1.0 / 2100.0

#: Margin used to keep barrier-cost evaluation off the exact actuator bounds.
LIMIT_MARGIN = 1e-6


@dataclass(frozen=True)
class SectionGeometry:
    """One bending section: actuator placement radius and lengths.

    Actuators sit 120 degrees apart at ``radius`` from the section
    centerline; the local X axis points toward actuator 1.
    """

    radius: float                       # actuator placement radius r_i, m
    initial_length: float = 0.15        # unpressurized actuator length L0, m
    plate_offset_length: float = 0.02   # rigid plate offset b_i to next frame, m
    plate_offset_angle: float = np.pi / 3  # frame twist beta_i, rad
    actuator_max_elongation: float = 0.10  # l_max, m


@dataclass(frozen=True)
class RobotGeometry:
    """The full arm: three sections ordered proximal, medial, distal.

    The third section's plate offset doubles as the gripper offset
    (``gripper_offset_length`` / ``gripper_offset_angle``).
    """

    sections: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "sections", tuple(self.sections))

    @property
    def gripper_offset_length(self) -> float:
        return self.sections[-1].plate_offset_length

    @property
    def gripper_offset_angle(self) -> float:
        return self.sections[-1].plate_offset_angle

    def joint_limits(self) -> "JointLimits":
        """Per-actuator elongation bounds; lower bound is 0 (extension-only)."""
        upper = np.repeat([s.actuator_max_elongation for s in self.sections], 3)
        return JointLimits(lower=np.zeros(N_ACTUATORS), upper=upper)


@dataclass(frozen=True)
class JointLimits:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if self.lower.shape != (N_ACTUATORS,) or self.upper.shape != (N_ACTUATORS,):
            raise ValueError("joint limits must be 9-vectors")
        if not np.all(self.lower < self.upper):
            raise ValueError("lower limits must be strictly below upper limits")

    def contains(self, q) -> bool:
        q = as_actuator_vector(q)
        return bool(np.all(q > self.lower) and np.all(q < self.upper))

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def clamp_interior(self, q, margin: float = LIMIT_MARGIN) -> np.ndarray:
        """Clamp q into the open limit box shrunk by ``margin`` on each side."""
        q = as_actuator_vector(q)
        return np.clip(q, self.lower + margin, self.upper - margin)


def as_actuator_vector(q) -> np.ndarray:
    """Validate and return q as a (9,) float array of finite elongations."""
    q = np.asarray(q, dtype=float)
    if q.shape != (N_ACTUATORS,):
        raise ValueError(f"actuator vector must have shape (9,), got {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("actuator vector entries must be finite")
    return q


def default_geometry() -> RobotGeometry:
    """Nominal arm used by the bundled scenarios.

    15 cm sections, actuator radii decreasing toward the tip, 60 degree
    plate twist between neighboring sections, no twist at the gripper plate,
    and 10 cm maximum elongation per actuator.
    """
    radii = (0.06, 0.05, 0.04)
    angles = (np.pi / 3, np.pi / 3, 0.0)
    sections = tuple(
        SectionGeometry(radius=r, plate_offset_angle=a) for r, a in zip(radii, angles)
    )
    return RobotGeometry(sections=sections)


def validate_geometry(geom: RobotGeometry) -> list:
    """Check geometry invariants; returns the list of violations (empty = valid)."""
    violations = []
    if len(geom.sections) != N_SECTIONS:
        violations.append("exactly 3 sections")
        return violations
    for i, sec in enumerate(geom.sections):
        if not sec.radius > 0:
            violations.append(f"section {i}: radius > 0")
        if not sec.initial_length > 0:
            violations.append(f"section {i}: initial_length > 0")
        if not sec.actuator_max_elongation > 0:
            violations.append(f"section {i}: actuator_max_elongation > 0")
    radii = [s.radius for s in geom.sections]
    if not (radii[0] >= radii[1] >= radii[2]):
        violations.append("section radii non-increasing from base to tip")
    return violations


def pressure_to_elongation(pressure):
    """Elongation (m) commanded by a regulator pressure (psi). Linear map."""
    return np.asarray(pressure, dtype=float) * ELONGATION_PER_PSI


def elongation_to_pressure(elongation):
    """Pressure (psi) required for an elongation (m). Inverse of the above.

    Negative elongations map to negative pressures, which are physically
    infeasible; callers flag them rather than erroring here.
    """
    return np.asarray(elongation, dtype=float) / ELONGATION_PER_PSI
