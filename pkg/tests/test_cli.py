import csv
import json

import numpy as np
import pytest

from softarm.cli import main, run_scenario
from softarm.config import (
    ConfigError,
    geometry_from_dict,
    load_scenario_dict,
    parse_scenario,
    target_pose_from_dict,
)
from softarm.geometry import default_geometry
from softarm.rotations import rot_x, rot_z


def write_config(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def minimal_controller_config(**overrides):
    cfg = {
        "name": "mini",
        "kind": "controller",
        "seed": 7,
        "geometry": "default",
        "controller": {
            "mode": "PositionWithJL",
            "position_tolerance": 0.0008,
            "max_iterations": 500,
            "gains": {"alpha": 0.074,
                      "joint_limit": {"value_far": -0.01,
                                      "switch_threshold": 0.03}},
        },
        "targets": [{"position": [-0.0498, 0.0657, 0.6674]}],
    }
    cfg.update(overrides)
    return cfg


class TestConfigParsing:
    def test_bundled_scenarios_resolve_by_name(self):
        data = load_scenario_dict("position_35pts")
        assert data["kind"] == "controller"
        assert len(data["targets"]) == 35

    def test_missing_file_is_config_error(self):
        with pytest.raises(ConfigError):
            load_scenario_dict("no_such_scenario_anywhere")

    def test_bad_json_is_config_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_scenario_dict(path)

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_scenario({"name": "x", "kind": "wat"})

    def test_geometry_validation_enforced(self):
        bad = {"sections": [{"radius": 0.04}, {"radius": 0.05}, {"radius": 0.06}]}
        with pytest.raises(ConfigError):
            geometry_from_dict(bad)

    def test_rotation_relative_to_upright(self):
        geom = default_geometry()
        pose = target_pose_from_dict(
            {"rotation": {"axis": "x", "angle_deg": -90.0}}, geom)
        expected = rot_x(np.deg2rad(-90.0)) @ rot_z(2 * np.pi / 3)
        np.testing.assert_allclose(pose.rotation, expected, atol=1e-12)

    def test_seed_override(self, tmp_path):
        data = minimal_controller_config()
        scenario = parse_scenario(data, seed_override=99)
        assert scenario.seed == 99


class TestRunScenario:
    def test_empty_target_list_succeeds(self, tmp_path):
        path = write_config(tmp_path, minimal_controller_config(targets=[]))
        assert run_scenario(path, out_dir=tmp_path / "out", quiet=True) == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["aggregate"]["n_runs"] == 0

    def test_single_target_produces_csv_and_summary(self, tmp_path):
        path = write_config(tmp_path, minimal_controller_config())
        assert run_scenario(path, out_dir=tmp_path / "out", quiet=True) == 0
        with open(tmp_path / "out" / "steps.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert rows
        assert set(rows[0]) >= {"target", "iteration", "q1", "p9", "err_pos",
                                "infeasible"}
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["aggregate"]["n_converged"] == 1

    def test_summary_stats_recomputable_from_csv(self, tmp_path):
        cfg = minimal_controller_config(
            targets=[{"position": [-0.0498, 0.0657, 0.6674]},
                     {"position": [-0.0601, -0.1457, 0.6309]}])
        path = write_config(tmp_path, cfg)
        assert run_scenario(path, out_dir=tmp_path / "out", quiet=True) == 0
        with open(tmp_path / "out" / "steps.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        finals = {}
        for row in rows:
            finals[(row["target"], row["repetition"])] = float(row["err_pos"])
        errs = np.array(sorted(finals.values()))
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["aggregate"]["err_pos_mean_mm"] == pytest.approx(
            errs.mean() * 1e3, rel=1e-9)
        assert summary["aggregate"]["err_pos_std_mm"] == pytest.approx(
            errs.std() * 1e3, rel=1e-9)

    def test_rerun_is_byte_identical(self, tmp_path):
        path = write_config(tmp_path, minimal_controller_config())
        run_scenario(path, out_dir=tmp_path / "a", quiet=True)
        run_scenario(path, out_dir=tmp_path / "b", quiet=True)
        assert (tmp_path / "a" / "steps.csv").read_bytes() == \
            (tmp_path / "b" / "steps.csv").read_bytes()

    def test_strict_mode_fails_on_nonconverged(self, tmp_path):
        cfg = minimal_controller_config(strict=True)
        cfg["controller"]["max_iterations"] = 2  # cannot converge in 2 steps
        path = write_config(tmp_path, cfg)
        assert run_scenario(path, out_dir=tmp_path / "out", quiet=True) == 2

    def test_config_error_exit_code(self, tmp_path):
        path = write_config(tmp_path, {"name": "x"})  # missing kind
        assert run_scenario(path, out_dir=tmp_path / "out", quiet=True) == 1

    def test_unreadable_geometry_file_exit_code(self, tmp_path):
        cfg = minimal_controller_config(geometry="does/not/exist.json")
        path = write_config(tmp_path, cfg)
        assert run_scenario(path, out_dir=tmp_path / "out", quiet=True) == 1

    def test_geometry_loaded_from_file(self, tmp_path):
        geom_path = tmp_path / "geom.json"
        geom_path.write_text(json.dumps({"sections": [
            {"radius": 0.06}, {"radius": 0.05},
            {"radius": 0.04, "plate_offset_angle": 0.0}]}))
        cfg = minimal_controller_config(geometry=str(geom_path))
        path = write_config(tmp_path, cfg)
        assert run_scenario(path, out_dir=tmp_path / "out", quiet=True) == 0


class TestCompare:
    def compare_config(self):
        return {
            "name": "cmp",
            "kind": "compare",
            "seed": 3,
            "initial_q": [0.051, 0.05, 0.049] * 3,
            "target": {"position": [-0.0498, 0.0657, 0.6674]},
            "controllers": [
                {"name": "a", "mode": "PositionWithJL", "max_iterations": 500,
                 "gains": {"alpha": 0.074,
                           "joint_limit": {"value_far": -0.01,
                                           "switch_threshold": 0.03}}},
                {"name": "b", "mode": "PositionWithJL", "max_iterations": 500,
                 "gains": {"alpha": 0.074}},
            ],
        }

    def test_compare_writes_aligned_csv_and_verdicts(self, tmp_path):
        path = write_config(tmp_path, self.compare_config())
        assert main(["compare", path, "--out", str(tmp_path / "out"),
                     "--quiet"]) == 0
        with open(tmp_path / "out" / "compare.csv", newline="") as fh:
            header = fh.readline().strip().split(",")
        assert header == ["iteration", "a_err_pos", "a_err_rot",
                          "b_err_pos", "b_err_rot"]
        verdicts = (tmp_path / "out" / "verdicts.txt").read_text()
        assert "a: converged" in verdicts and "b: converged" in verdicts

    def test_mode_compared_with_itself_is_identical(self, tmp_path):
        cfg = self.compare_config()
        cfg["controllers"][1] = dict(cfg["controllers"][0], name="a2")
        path = write_config(tmp_path, cfg)
        assert main(["compare", path, "--out", str(tmp_path / "out"),
                     "--quiet"]) == 0
        with open(tmp_path / "out" / "compare.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                assert row["a_err_pos"] == row["a2_err_pos"]
                assert row["a_err_rot"] == row["a2_err_rot"]

    def test_compare_requires_two_controllers(self, tmp_path):
        cfg = self.compare_config()
        cfg["controllers"] = cfg["controllers"][:1]
        path = write_config(tmp_path, cfg)
        assert main(["compare", path, "--quiet"]) == 1

    def test_compare_rejects_other_kinds(self, tmp_path):
        path = write_config(tmp_path, minimal_controller_config())
        assert main(["compare", path, "--quiet"]) == 1


class TestHarvestScenario:
    def test_bundled_harvest_runs(self, tmp_path):
        assert main(["run", "harvest_default", "--out", str(tmp_path / "out"),
                     "--quiet"]) == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert all(r["final_state"] == "Done" for r in summary["runs"])
        with open(tmp_path / "out" / "steps.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        stages = [r["stage"] for r in rows if r["berry"] == "0"]
        for stage in ("InitialPlacement", "FinePositioning", "Grasp", "ReturnHome"):
            assert stage in stages
