"""Two-camera frame emulation: eye-to-hand (C1) and eye-in-hand (C2).

Transform naming: ``x_in_y`` is the pose of frame x expressed in frame y,
i.e. the rigid map taking x-frame coordinates to y-frame coordinates.
The registry stores the base pose in C1 (from point registration) and the
C2 mount pose in the end-effector frame; berry fixes from C2 are chained
through the measured end-effector pose back into the base frame. When a
camera loses the berry the most recent base-frame fix is held.
"""

from dataclasses import dataclass

import numpy as np

from .kinematics import Pose
from .rotations import orthonormalize

#: Radius (m) of the line-of-sight tube blocked by the end-effector.
OCCLUSION_FOOTPRINT_RADIUS = 0.04


class DegenerateConfiguration(Exception):
    """Point registration needs >= 3 non-collinear correspondences."""


class NoTargetEverSeen(Exception):
    """Hold rule invoked before any berry sighting."""


def register_rigid(points_a, points_b):
    """Least-squares rigid transform T minimizing sum ||T a_i - b_i||^2.

    Rotation from the SVD of the cross-covariance with reflection
    correction, translation from the centroids. Returns (Pose, rms_residual).
    Raises DegenerateConfiguration for fewer than 3 points or a collinear
    source set (rotation about the line would be unobservable).
    """
    A = np.asarray(points_a, dtype=float)
    B = np.asarray(points_b, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[1] != 3:
        raise ValueError("point sets must be matching (N, 3) arrays")
    if A.shape[0] < 3:
        raise DegenerateConfiguration("need at least 3 correspondences")
    centroid_a = A.mean(axis=0)
    centroid_b = B.mean(axis=0)
    Ac = A - centroid_a
    Bc = B - centroid_b
    sv = np.linalg.svd(Ac, compute_uv=False)
    if sv[1] <= 1e-12 * max(sv[0], 1e-300):
        raise DegenerateConfiguration("source points are collinear")
    H = Ac.T @ Bc
    U, _, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
    R = orthonormalize(R)
    t = centroid_b - R @ centroid_a
    residual = float(np.sqrt(np.mean(np.sum((A @ R.T + t - B) ** 2, axis=1))))
    return Pose(t, R), residual


@dataclass(frozen=True)
class FrameRegistry:
    """Calibrated camera transforms shared by a scenario."""

    base_in_cam1: Pose   # base frame expressed in C1 (maps base -> C1 coords)
    cam2_in_ee: Pose     # C2 mount expressed in the end-effector frame
    registration_residual: float = 0.0

    def cam1_in_base(self) -> Pose:
        return self.base_in_cam1.inverse()

    def ee_in_base(self, ee_in_cam1: Pose) -> Pose:
        """Convert a C1 end-effector measurement into the base frame."""
        return self.base_in_cam1.inverse().compose(ee_in_cam1)


@dataclass
class BerryTarget:
    """One berry observation; camera positions are None when not visible."""

    position_c2: np.ndarray | None = None
    position_c1: np.ndarray | None = None
    last_known_base: np.ndarray | None = None
    occluded: bool = False


def berry_to_base(target: BerryTarget, ee_in_cam1: Pose, registry: FrameRegistry) -> np.ndarray:
    """Berry position in the base frame from the eye-in-hand camera.

    Chains base <- C1 <- EE <- C2 exactly: p_base = T_ee_base T_c2_ee p_c2
    with T_ee_base = T_c1_base T_ee_c1. When C2 has no fix, returns the
    most recent base-frame estimate (hold rule).
    """
    if target.position_c2 is None:
        if target.last_known_base is None:
            raise NoTargetEverSeen("berry occluded and never seen before")
        return target.last_known_base
    ee_in_base = registry.ee_in_base(ee_in_cam1)
    p_base = ee_in_base.compose(registry.cam2_in_ee).transform_point(target.position_c2)
    target.last_known_base = p_base
    return p_base


def cam1_target_to_base(target: BerryTarget, registry: FrameRegistry) -> np.ndarray:
    """Berry position in the base frame from the eye-to-hand camera, with
    the same hold rule as :func:`berry_to_base`."""
    if target.position_c1 is None:
        if target.last_known_base is None:
            raise NoTargetEverSeen("berry occluded and never seen before")
        return target.last_known_base
    p_base = registry.base_in_cam1.inverse().transform_point(target.position_c1)
    target.last_known_base = p_base
    return p_base


def _ee_blocks_ray(cam_origin, berry, ee_position, footprint_radius) -> bool:
    ray = berry - cam_origin
    length_sq = float(ray @ ray)
    if length_sq == 0.0:
        return False
    t = float((ee_position - cam_origin) @ ray) / length_sq
    if not 0.0 < t < 1.0:
        return False
    closest = cam_origin + t * ray
    return float(np.linalg.norm(ee_position - closest)) < footprint_radius


def simulate_observation(true_berry_base, ee_pose: Pose, registry: FrameRegistry,
                         noise_std: float = 0.0, rng=None,
                         footprint_radius: float = OCCLUSION_FOOTPRINT_RADIUS,
                         force_c1_occluded: bool = False,
                         force_c2_occluded: bool = False,
                         previous: BerryTarget | None = None) -> BerryTarget:
    """Project the true berry into both camera frames (stand-in for marker
    detection).

    C1 loses the berry when the end-effector sits within ``footprint_radius``
    of the C1-to-berry line of sight (or when forced); C2 loses it only when
    forced. ``previous`` carries the hold-rule state across steps.
    """
    p_base = np.asarray(true_berry_base, dtype=float)
    ee_true = ee_pose

    c1_occluded = force_c1_occluded or _ee_blocks_ray(
        registry.base_in_cam1.inverse().position, p_base, ee_true.position,
        footprint_radius)
    position_c1 = None
    if not c1_occluded:
        position_c1 = registry.base_in_cam1.transform_point(p_base)
        if noise_std > 0 and rng is not None:
            position_c1 = position_c1 + rng.normal(0.0, noise_std, 3)

    position_c2 = None
    if not force_c2_occluded:
        cam2_in_base = ee_true.compose(registry.cam2_in_ee)
        position_c2 = cam2_in_base.inverse().transform_point(p_base)
        if noise_std > 0 and rng is not None:
            position_c2 = position_c2 + rng.normal(0.0, noise_std, 3)

    target = BerryTarget(
        position_c2=position_c2,
        position_c1=position_c1,
        last_known_base=None if previous is None else previous.last_known_base,
        occluded=position_c2 is None,
    )
    return target


def look_at(eye, point, up=(0.0, 0.0, 1.0)) -> Pose:
    """Camera pose in the parent frame with +Z viewing toward ``point``."""
    eye = np.asarray(eye, dtype=float)
    z = np.asarray(point, dtype=float) - eye
    z = z / np.linalg.norm(z)
    up = np.asarray(up, dtype=float)
    x = np.cross(up, z)
    if np.linalg.norm(x) < 1e-12:
        x = np.cross(np.array([0.0, 1.0, 0.0]), z)
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return Pose(eye, np.column_stack([x, y, z]))


def default_registration_points(side: float = 0.2) -> np.ndarray:
    """Six base-frame fiducials on a cube of the given side length."""
    h = side / 2.0
    return np.array([
        [h, h, 0.0], [-h, h, 0.0], [h, -h, 0.0],
        [-h, -h, side], [h, h, side], [-h, h, side],
    ])


def build_registry(cam1_position=(0.0, -1.2, 0.4), cam1_target=(0.0, 0.25, 0.35),
                   cam2_offset=(0.0, 0.0, 0.01),
                   registration_points: np.ndarray | None = None) -> FrameRegistry:
    """Registry for the default scenario layout: eye-to-hand camera 1.2 m
    behind the base looking at the berry region, eye-in-hand camera at the
    gripper center looking along the approach axis. ``base_in_cam1`` is
    recovered by registering the fiducials rather than copied from ground
    truth, so the registration path is exercised end to end."""
    cam1_in_base = look_at(cam1_position, cam1_target)
    truth_base_in_cam1 = cam1_in_base.inverse()
    points = registration_points if registration_points is not None \
        else default_registration_points()
    observed_in_cam1 = np.array([truth_base_in_cam1.transform_point(p) for p in points])
    base_in_cam1, residual = register_rigid(points, observed_in_cam1)
    cam2_in_ee = Pose(np.asarray(cam2_offset, dtype=float), np.eye(3))
    return FrameRegistry(base_in_cam1=base_in_cam1, cam2_in_ee=cam2_in_ee,
                         registration_residual=residual)


def load_points(path) -> np.ndarray:
    """Read registration points from a plain-text file: one 'x y z' line per
    point, coordinates in meters, '#' comments allowed."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"expected 3 coordinates per line, got: {line!r}")
            rows.append([float(v) for v in parts])
    return np.asarray(rows, dtype=float)
