import numpy as np
import pytest

from softarm.geometry import (
    JointLimits,
    RobotGeometry,
    SectionGeometry,
    as_actuator_vector,
    default_geometry,
    elongation_to_pressure,
    pressure_to_elongation,
    validate_geometry,
)


def test_default_geometry_is_valid():
    assert validate_geometry(default_geometry()) == []


def test_zero_radius_is_violation():
    geom = default_geometry()
    bad = RobotGeometry(sections=(
        SectionGeometry(radius=0.0),) + geom.sections[1:])
    assert any("radius > 0" in v for v in validate_geometry(bad))


def test_wrong_section_count_is_violation():
    bad = RobotGeometry(sections=default_geometry().sections[:2])
    assert validate_geometry(bad) == ["exactly 3 sections"]


def test_nonmonotone_radii_is_violation():
    secs = [SectionGeometry(radius=r) for r in (0.04, 0.05, 0.06)]
    assert any("non-increasing" in v for v in validate_geometry(RobotGeometry(secs)))


def test_gripper_offset_aliases_last_section():
    geom = default_geometry()
    assert geom.gripper_offset_length == geom.sections[2].plate_offset_length
    assert geom.gripper_offset_angle == 0.0


def test_joint_limits_lower_bound_is_zero():
    limits = default_geometry().joint_limits()
    assert np.all(limits.lower == 0.0)
    assert np.all(limits.upper == 0.10)


def test_joint_limits_reject_inverted_bounds():
    with pytest.raises(ValueError):
        JointLimits(lower=np.full(9, 0.2), upper=np.full(9, 0.1))


def test_clamp_interior_keeps_margin():
    limits = default_geometry().joint_limits()
    q = np.array([-0.5, 0.0, 0.05, 0.1, 0.7, 0.02, 0.0, 0.1, 0.05])
    clamped = limits.clamp_interior(q, margin=1e-6)
    assert np.all(clamped > limits.lower)
    assert np.all(clamped < limits.upper)
    assert clamped[2] == 0.05  # interior values untouched


def test_pressure_map_published_ratio():
    assert pressure_to_elongation(21.0) == pytest.approx(0.01, abs=1e-15)
    assert pressure_to_elongation(0.0) == 0.0


def test_pressure_map_round_trip():
    assert elongation_to_pressure(pressure_to_elongation(37.5)) == pytest.approx(
        37.5, rel=1e-15)


def test_pressure_maps_linear_monotone_inverse():
    rng = np.random.default_rng(0)
    p = rng.uniform(0.0, 60.0, 100)
    e = pressure_to_elongation(p)
    # linearity and monotonicity
    assert np.allclose(pressure_to_elongation(2.0 * p), 2.0 * e, rtol=1e-15)
    order = np.argsort(p)
    assert np.all(np.diff(e[order]) >= 0)
    # mutually inverse to one machine epsilon times magnitude
    back = elongation_to_pressure(e)
    assert np.all(np.abs(back - p) <= np.finfo(float).eps * np.maximum(p, 1.0))


def test_actuator_vector_validation():
    with pytest.raises(ValueError):
        as_actuator_vector(np.zeros(8))
    with pytest.raises(ValueError):
        as_actuator_vector(np.array([np.nan] + [0.0] * 8))
    q = as_actuator_vector([0.01] * 9)
    assert q.shape == (9,)
