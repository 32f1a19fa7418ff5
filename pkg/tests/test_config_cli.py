import json
import os

import numpy as np
import pytest

from expanderflow import cli
from expanderflow.config import ConfigError, default_config, dump_config, load_config

FAST = [
    "--set", "grid.points_per_axis=33",
    "--set", "run.alpha=0.05",
    "--set", "iteration.quad_panels=16",
    "--set", "verify.holder_pairs=1024",
    "--set", "verify.defect_samples=128",
]


class TestConfig:
    def test_defaults_follow_dimension(self):
        assert default_config(2).points_per_axis == 257
        assert default_config(3).points_per_axis == 97
        assert default_config(3).half_width == 6.0

    def test_dimension_override_switches_grid_defaults(self):
        cfg = load_config(None, ["run.dimension=3"])
        assert cfg.points_per_axis == 97

    def test_explicit_grid_survives_dimension_default(self):
        cfg = load_config(None, ["run.dimension=3", "grid.points_per_axis=33"])
        assert cfg.points_per_axis == 33

    def test_bad_override_rejected(self):
        with pytest.raises(ConfigError):
            load_config(None, ["nosuch.key=1"])
        with pytest.raises(ConfigError):
            load_config(None, ["grid.points_per_axis=64"])  # even

    def test_ini_round_trip(self, tmp_path):
        cfg = load_config(None, ["run.alpha=0.03", "iteration.delta=0.15"])
        path = tmp_path / "run.ini"
        path.write_text(dump_config(cfg))
        back = load_config(str(path))
        assert back == cfg

    def test_validation_catches_ball_outside_tube(self):
        with pytest.raises(ConfigError):
            load_config(None, ["iteration.delta=0.7"])


class TestCli:
    def test_print_config(self, capsys):
        rc = cli.main(["print-config", "--set", "run.alpha=0.01"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "[iteration]" in out
        assert "alpha = 0.01" in out

    def test_config_error_exit_code(self, capsys):
        rc = cli.main(["solve", "--set", "iteration.delta=0.7", "--out", "/tmp/xf_nope"])
        assert rc == 1

    def test_solve_writes_artifacts_and_exits_zero(self, tmp_path):
        out = str(tmp_path / "solve")
        rc = cli.main(["solve", "--out", out, "--threads", "1"] + FAST)
        assert rc == 0
        for name in ("config.ini", "caloric.field", "solution_frame.field", "v.npz", "trace.csv", "trace.json", "norms.json"):
            assert os.path.exists(os.path.join(out, name)), name
        doc = json.load(open(os.path.join(out, "norms.json")))
        assert doc["schema_version"] == 1

    def test_alpha_zero_one_iteration(self, tmp_path, capsys):
        out = str(tmp_path / "zero")
        rc = cli.main(["solve", "--out", out, "--set", "grid.points_per_axis=33", "--set", "run.alpha=0.0"])
        assert rc == 0
        lines = open(os.path.join(out, "trace.csv"), newline="").read().strip().split("\r\n")
        assert len(lines) == 2  # header plus the single converged iteration

    def test_large_data_exit_two(self, tmp_path):
        out = str(tmp_path / "big")
        rc = cli.main([
            "solve", "--out", out,
            "--set", "grid.points_per_axis=33",
            "--set", "run.alpha=1.5707963267948966",
            "--set", "iteration.max_iter=5",
        ])
        assert rc == 2

    def test_oracle_cmd(self, tmp_path, capsys):
        out = str(tmp_path / "oracle")
        rc = cli.main(["oracle", "--out", out, "--set", "run.alpha=0.05"])
        assert rc == 0
        header = json.load(open(os.path.join(out, "profile.json")))
        assert header["converged"] is True
        assert header["n"] == 2

    def test_oracle_out_of_regime_exit_two(self, tmp_path):
        out = str(tmp_path / "oracle_big")
        rc = cli.main(["oracle", "--out", out, "--set", "run.alpha=3.5"])
        assert rc == 2

    def test_verify_on_saved_solution(self, tmp_path):
        out = str(tmp_path / "solve")
        assert cli.main(["solve", "--out", out] + FAST) == 0
        vout = str(tmp_path / "verify")
        rc = cli.main(["verify", "--out", vout, "--solution", out] + FAST)
        assert os.path.exists(os.path.join(vout, "verification.json"))
        doc = json.load(open(os.path.join(vout, "verification.json")))
        assert doc["schema_version"] == 1
        assert isinstance(doc["pass_flags"], dict)

    def test_sweep_writes_csv_and_slope(self, tmp_path):
        out = str(tmp_path / "sweep")
        rc = cli.main(
            ["sweep", "--out", out, "--alphas", "0.02,0.04", "--probe-pairs", "3"] + FAST
        )
        assert rc == 0
        lines = open(os.path.join(out, "sweep.csv"), newline="").read().strip().split("\r\n")
        assert lines[0].startswith("alpha,")
        assert len(lines) == 3
        doc = json.load(open(os.path.join(out, "sweep.json")))
        assert "x_norm_slope" in doc

    def test_identical_runs_bit_identical(self, tmp_path):
        a = str(tmp_path / "a")
        b = str(tmp_path / "b")
        assert cli.main(["solve", "--out", a, "--seed", "7"] + FAST) == 0
        assert cli.main(["solve", "--out", b, "--seed", "7"] + FAST) == 0
        for name in sorted(os.listdir(a)):
            fa = open(os.path.join(a, name), "rb").read()
            fb = open(os.path.join(b, name), "rb").read()
            assert fa == fb, name


class TestSpaceTimeArtifacts:
    def test_solve_writes_slice_dumps(self, tmp_path):
        out = str(tmp_path / "st")
        rc = cli.main(
            [
                "solve", "--out", out,
                "--set", "grid.points_per_axis=33",
                "--set", "run.alpha=0.05",
                "--set", "iteration.mode=space_time",
                "--set", "iteration.t_max=2.0",
                "--set", "verify.holder_pairs=1024",
            ]
        )
        assert rc == 0
        slices = [name for name in os.listdir(out) if name.startswith("u_t")]
        assert len(slices) >= 5
        from expanderflow.fields import load_field

        fld = load_field(os.path.join(out, sorted(slices)[0]))
        assert fld.time_label > 0.0
