"""Scenario configuration: JSON schema parsing and object construction.

One JSON file fully describes a run: geometry, plant, controller(s) or
workflow, targets, seed. Every random draw derives from the scenario seed
so re-running a file reproduces its outputs byte for byte.
"""

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .controller import (
    ControllerConfig,
    ControllerMode,
    GainSchedule,
    JointLimitSchedule,
)
from .geometry import (
    RobotGeometry,
    SectionGeometry,
    default_geometry,
    validate_geometry,
)
from .kinematics import Pose
from .plant import PlantConfig
from .rotations import rot_x, rot_y, rot_z, rotvec_to_matrix
from .workflow import StagePolicy, WorkflowConfig


class ConfigError(Exception):
    """Schema violation or unresolvable reference in a scenario file."""


def derive_seed(*keys) -> int:
    """Stable sub-seed from the scenario seed and integer keys."""
    return int(np.random.SeedSequence(list(keys)).generate_state(1)[0])


def upright_rotation(geom: RobotGeometry) -> np.ndarray:
    """End-effector rotation of the straight arm (plate twists only)."""
    total = sum(sec.plate_offset_angle for sec in geom.sections)
    return rot_z(total)


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

def geometry_from_dict(data) -> RobotGeometry:
    """Build a RobotGeometry from the config representation.

    Accepts the string "default" or {"sections": [{...} x3]} with keys
    radius, initial_length, plate_offset_length, plate_offset_angle,
    actuator_max_elongation (meters/radians).
    """
    if data == "default" or data is None:
        return default_geometry()
    if not isinstance(data, dict) or "sections" not in data:
        raise ConfigError("geometry must be 'default' or {'sections': [...]}")
    sections = []
    for i, sec in enumerate(data["sections"]):
        try:
            sections.append(SectionGeometry(
                radius=float(sec["radius"]),
                initial_length=float(sec.get("initial_length", 0.15)),
                plate_offset_length=float(sec.get("plate_offset_length", 0.02)),
                plate_offset_angle=float(sec.get("plate_offset_angle", np.pi / 3)),
                actuator_max_elongation=float(sec.get("actuator_max_elongation", 0.10)),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"geometry section {i}: {exc}") from exc
    geom = RobotGeometry(sections=tuple(sections))
    violations = validate_geometry(geom)
    if violations:
        raise ConfigError("invalid geometry: " + "; ".join(violations))
    return geom


def load_geometry(path) -> RobotGeometry:
    """Read a geometry JSON file (same schema as the inline form)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return geometry_from_dict(json.load(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read geometry file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"geometry file {path} is not valid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# Gains / controller
# ---------------------------------------------------------------------------

def gains_from_dict(data) -> GainSchedule:
    if not isinstance(data, dict) or "alpha" not in data:
        raise ConfigError("gains must be an object with at least 'alpha'")
    jl = None
    if data.get("joint_limit") is not None:
        j = data["joint_limit"]
        try:
            jl = JointLimitSchedule(
                value_far=float(j["value_far"]),
                switch_threshold=float(j["switch_threshold"]),
                threshold_metric=j.get("metric", "position"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"joint_limit schedule: {exc}") from exc
    try:
        return GainSchedule(
            alpha=float(data["alpha"]),
            gamma_position=float(data.get("gamma_position", 1.0)),
            gamma_orientation=float(data.get("gamma_orientation", 0.0)),
            joint_limit=jl,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"gains: {exc}") from exc


def controller_from_dict(data, geom: RobotGeometry) -> tuple:
    """Returns (ControllerConfig, GainSchedule) from a controller block."""
    if not isinstance(data, dict) or "mode" not in data:
        raise ConfigError("controller block needs a 'mode'")
    try:
        mode = ControllerMode(data["mode"])
    except ValueError as exc:
        names = ", ".join(m.value for m in ControllerMode)
        raise ConfigError(f"unknown mode {data['mode']!r}; one of: {names}") from exc
    axes = data.get("orientation_error_axes")
    cfg = ControllerConfig(
        geometry=geom,
        joint_limits=geom.joint_limits(),
        mode=mode,
        dt=float(data.get("dt", 0.05)),
        position_tolerance=float(data.get("position_tolerance", 0.8e-3)),
        orientation_tolerance=float(np.deg2rad(data.get("orientation_tolerance_deg", 0.6))),
        max_iterations=int(data.get("max_iterations", 3000)),
        orientation_error_axes=tuple(axes) if axes is not None else None,
    )
    gains = gains_from_dict(data.get("gains", {"alpha": 0.05}))
    return cfg, gains


# ---------------------------------------------------------------------------
# Plant
# ---------------------------------------------------------------------------

def plant_config_from_dict(data, geom: RobotGeometry, seed: int) -> PlantConfig:
    data = data or {}
    mismatch = float(data.get("mismatch", 0.0))
    if mismatch > 0:
        scale = np.random.default_rng(derive_seed(seed, 0xA11)).uniform(
            -mismatch, mismatch, 9)
    else:
        scale = np.zeros(9)
    return PlantConfig(
        true_geometry=geom,
        length_scale_error=scale,
        position_noise_std=float(data.get("position_noise_std", 0.0)),
        rotation_noise_std=float(data.get("rotation_noise_std", 0.0)),
        filter_cutoff=float(data.get("filter_cutoff", 10.0)),
        dt=float(data.get("dt", 0.05)),
        rng_seed=seed,
    )


# ---------------------------------------------------------------------------
# Targets
# ---------------------------------------------------------------------------

_AXES = {"x": rot_x, "y": rot_y, "z": rot_z}


def rotation_from_dict(data, geom: RobotGeometry) -> np.ndarray:
    """Rotation spec: {"rotvec": [...]} (radians, absolute) or
    {"axis": "x", "angle_deg": a, "relative_to": "upright"|"base"}."""
    if "rotvec" in data:
        return rotvec_to_matrix(np.asarray(data["rotvec"], dtype=float))
    axis = data.get("axis")
    if axis not in _AXES:
        raise ConfigError(f"rotation axis must be one of x/y/z, got {axis!r}")
    R = _AXES[axis](float(np.deg2rad(data.get("angle_deg", 0.0))))
    if data.get("relative_to", "upright") == "upright":
        R = R @ upright_rotation(geom)
    return R


def target_pose_from_dict(data, geom: RobotGeometry) -> Pose:
    """A target is a position, a rotation, or both. Missing parts default
    to the straight-arm pose (ignored by single-task modes)."""
    if not isinstance(data, dict) or ("position" not in data and "rotation" not in data):
        raise ConfigError("target needs 'position' and/or 'rotation'")
    position = np.asarray(data.get("position", [0.0, 0.0, 0.0]), dtype=float)
    if position.shape != (3,):
        raise ConfigError("target position must be a 3-vector")
    if "rotation" in data:
        rotation = rotation_from_dict(data["rotation"], geom)
    else:
        rotation = upright_rotation(geom)
    return Pose(position, rotation)


def initial_q_from_dict(data, geom: RobotGeometry, rng) -> np.ndarray:
    """Initial actuator state: explicit 9-vector or
    {"midpoint_jitter": j} drawn from the run RNG (keeps the start off the
    straight singularity, mirroring the perturbation rule)."""
    limits = geom.joint_limits()
    if data is None:
        data = {"midpoint_jitter": 1e-3}
    if isinstance(data, dict):
        jitter = float(data.get("midpoint_jitter", 1e-3))
        return limits.midpoint() + rng.uniform(-jitter, jitter, 9)
    q = np.asarray(data, dtype=float)
    if q.shape != (9,):
        raise ConfigError("initial_q must be a 9-vector or {'midpoint_jitter': j}")
    return q


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------

VALID_KINDS = ("controller", "compare", "harvest")


@dataclass
class Scenario:
    """Fully resolved scenario: everything a run needs, plus the raw dict
    for provenance."""

    name: str
    kind: str
    seed: int
    strict: bool
    geometry: RobotGeometry
    raw: dict = field(repr=False, default_factory=dict)


def load_scenario_dict(path) -> dict:
    """Load a scenario JSON file; bare bundled names (e.g.
    'position_35pts') resolve to the packaged scenario directory."""
    p = Path(path)
    if not p.exists():
        name = p.name if p.suffix else f"{p.name}.json"
        candidate = resources.files("softarm").joinpath("scenarios").joinpath(name)
        if candidate.is_file():
            return json.loads(candidate.read_text(encoding="utf-8"))
        raise ConfigError(f"scenario file not found: {path}")
    try:
        with open(p, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def parse_scenario(data, seed_override=None) -> Scenario:
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    for key in ("name", "kind"):
        if key not in data:
            raise ConfigError(f"scenario missing required key {key!r}")
    if data["kind"] not in VALID_KINDS:
        raise ConfigError(f"kind must be one of {VALID_KINDS}, got {data['kind']!r}")
    geometry = data.get("geometry", "default")
    if isinstance(geometry, str) and geometry not in ("default",):
        geom = load_geometry(geometry)
    else:
        geom = geometry_from_dict(geometry)
    seed = int(seed_override if seed_override is not None else data.get("seed", 0))
    return Scenario(
        name=str(data["name"]),
        kind=data["kind"],
        seed=seed,
        strict=bool(data.get("strict", False)),
        geometry=geom,
        raw=data,
    )


def workflow_from_dict(data, base_cfg: ControllerConfig) -> WorkflowConfig:
    data = data or {}
    defaults = WorkflowConfig(controller=base_cfg)
    placement = defaults.placement
    fine = defaults.fine
    if "placement_gains" in data:
        placement = StagePolicy(ControllerMode.FullThreeTask,
                                gains_from_dict(data["placement_gains"]),
                                int(data.get("placement_max_iterations", 2000)))
    elif "placement_max_iterations" in data:
        placement = StagePolicy(placement.mode, placement.gains,
                                int(data["placement_max_iterations"]))
    if "fine_gains" in data:
        fine = StagePolicy(ControllerMode.PositionWithJL,
                           gains_from_dict(data["fine_gains"]),
                           int(data.get("fine_max_iterations", 1000)))
    elif "fine_max_iterations" in data:
        fine = StagePolicy(fine.mode, fine.gains, int(data["fine_max_iterations"]))
    kwargs = dict(
        controller=base_cfg,
        coarse_threshold=float(data.get("coarse_threshold", 0.06)),
        grasp_threshold=float(data.get("grasp_threshold", 0.02)),
        placement=placement,
        fine=fine,
        home_iterations=int(data.get("home_iterations", 100)),
        observation_noise_std=float(data.get("observation_noise_std", 0.0)),
    )
    if "standoff_offset" in data:
        kwargs["standoff_offset"] = np.asarray(data["standoff_offset"], dtype=float)
    if "home_q" in data:
        kwargs["home_q"] = np.asarray(data["home_q"], dtype=float)
    return WorkflowConfig(**kwargs)
