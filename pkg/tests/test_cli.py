import json
import subprocess
import sys
from dataclasses import asdict

import pytest

from glider_assim.cli import main
from glider_assim.config import ExperimentConfig, apply_env_overrides


def read(path):
    return path.read_bytes()


class TestRunCommand:
    def test_outputs_and_row_count(self, tmp_path):
        out = tmp_path / "run1"
        code = main(["run", "--flow", "center", "--gliders", "2", "--strategy", "none",
                     "--seed", "0", "--obs", "7", "--out", str(out)])
        assert code == 0
        metrics = (out / "metrics.csv").read_text().strip().split("\n")
        assert metrics[0] == "obs_index,time,trace,rms,g1_x,g1_y,g2_x,g2_y"
        assert len(metrics) == 8
        assert (out / "paths.csv").read_text().startswith("strategy,glider,t,x,y\n")
        resolved = json.loads((out / "config.resolved").read_text())
        assert resolved["flow"] == "center" and resolved["n_obs"] == 7

    def test_repeat_invocations_byte_identical(self, tmp_path):
        args = ["run", "--flow", "saddle", "--gliders", "2", "--strategy", "optimal",
                "--seed", "1", "--obs", "5"]
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(out_a)]) == 0
        assert main(args + ["--out", str(out_b)]) == 0
        assert read(out_a / "metrics.csv") == read(out_b / "metrics.csv")
        assert read(out_a / "paths.csv") == read(out_b / "paths.csv")

    def test_zero_gliders_is_config_error(self, tmp_path, capsys):
        code = main(["run", "--gliders", "0", "--out", str(tmp_path / "x")])
        assert code == 1
        assert "gliders" in capsys.readouterr().err

    def test_unknown_flag_is_config_error(self, capsys):
        assert main(["run", "--no-such-flag"]) == 1

    def test_bad_flow_is_config_error(self, tmp_path, capsys):
        code = main(["run", "--flow", "vortex", "--out", str(tmp_path / "x")])
        assert code == 1
        assert "flow" in capsys.readouterr().err

    def test_default_protocol_run(self, tmp_path):
        # default observation count: one hundred rows in metrics.csv
        out = tmp_path / "full"
        code = main(["run", "--flow", "center", "--gliders", "5", "--strategy", "optimal",
                     "--seed", "0", "--out", str(out)])
        assert code == 0
        lines = (out / "metrics.csv").read_text().strip().split("\n")
        assert len(lines) == 101
        assert (out / "paths.csv").exists() and (out / "config.resolved").exists()

    def test_optimal_needs_positive_speed(self, tmp_path, capsys):
        code = main(["run", "--strategy", "optimal", "--umax", "0",
                     "--out", str(tmp_path / "x")])
        assert code == 1
        assert "u_max" in capsys.readouterr().err

    def test_debug_dump_written(self, tmp_path):
        out = tmp_path / "dbg"
        code = main(["run", "--flow", "center", "--gliders", "1", "--strategy", "optimal",
                     "--seed", "0", "--obs", "2", "--out", str(out), "--debug-solver"])
        assert code == 0
        text = (out / "solver_debug.txt").read_text()
        assert "window 1 glider 1" in text and "path" in text


class TestConfigResolution:
    def test_config_file_flag_env_precedence(self, tmp_path, monkeypatch):
        cfg_file = tmp_path / "c.json"
        cfg_file.write_text(json.dumps({"flow": "saddle", "gliders": 3, "n_obs": 9}))
        out = tmp_path / "o"
        monkeypatch.setenv("GLIDER_ASSIM_GLIDERS", "4")
        code = main(["run", "--config", str(cfg_file), "--strategy", "none",
                     "--obs", "3", "--out", str(out)])
        assert code == 0
        resolved = json.loads((out / "config.resolved").read_text())
        assert resolved["flow"] == "saddle"      # from file
        assert resolved["gliders"] == 4          # env beats file
        assert resolved["n_obs"] == 3            # flag beats env and file

    def test_env_coercion_error(self, monkeypatch):
        monkeypatch.setenv("GLIDER_ASSIM_DT", "fast")
        assert main(["run", "--strategy", "none", "--obs", "1", "--out", "/tmp/x"]) == 1

    def test_round_trip(self):
        cfg = ExperimentConfig(flow="stable-node", gliders=7, strategy="random",
                               seed=13, noise_var=0.5, placement="circle")
        again = ExperimentConfig.from_json(cfg.to_json())
        assert asdict(again) == asdict(cfg)

    def test_unknown_key_rejected(self):
        with pytest.raises(Exception):
            ExperimentConfig.from_json('{"flow": "center", "wings": 2}')

    def test_json_int_promoted_to_float_fields(self):
        cfg = ExperimentConfig.from_json('{"dt": 1, "noise_var": 2}')
        assert cfg.dt == 1.0 and isinstance(cfg.dt, float)
        assert cfg.noise_var == 2.0

    def test_wrong_type_rejected(self):
        with pytest.raises(Exception):
            ExperimentConfig.from_json('{"gliders": "five"}')

    def test_env_override_round_trip(self, monkeypatch):
        cfg = ExperimentConfig()
        monkeypatch.setenv("GLIDER_ASSIM_NOISE_VAR", "2.5")
        monkeypatch.setenv("GLIDER_ASSIM_DEBUG_SOLVER", "true")
        new = apply_env_overrides(cfg)
        assert new.noise_var == 2.5 and new.debug_solver is True


class TestSweepCommand:
    def test_one_seed_grid(self, tmp_path):
        out = tmp_path / "sweep"
        code = main(["sweep", "--seeds", "1", "--obs", "2", "--out", str(out),
                     "--threads", "2"])
        assert code == 0
        summary = (out / "summary.csv").read_text().strip().split("\n")
        assert summary[0].startswith("flow,gliders,strategy,seed,status")
        assert len(summary) == 1 + 48            # 4 flows x 4 cohorts x 3 strategies
        run_dirs = [p for p in out.iterdir() if p.is_dir()]
        assert len(run_dirs) == 48
        for d in run_dirs:
            assert (d / "metrics.csv").exists() and (d / "paths.csv").exists()
        assert (out / "events.csv").read_text().startswith(
            "flow,gliders,strategy,seed,window,glider,kind")

    def test_bad_seed_count(self, tmp_path):
        assert main(["sweep", "--seeds", "0", "--out", str(tmp_path / "s")]) == 1


class TestProcessDeterminism:
    def test_two_processes_byte_identical(self, tmp_path):
        base = ["-m", "glider_assim.cli", "run", "--flow", "center", "--gliders", "2",
                "--strategy", "optimal", "--seed", "4", "--obs", "5"]
        out_a, out_b = tmp_path / "p1", tmp_path / "p2"
        for out in (out_a, out_b):
            proc = subprocess.run([sys.executable, *base, "--out", str(out)],
                                  capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
        assert read(out_a / "metrics.csv") == read(out_b / "metrics.csv")
        assert read(out_a / "paths.csv") == read(out_b / "paths.csv")
        assert read(out_a / "config.resolved") != b""
