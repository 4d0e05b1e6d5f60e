import json

import numpy as np
import pytest

from voxnav.cli import EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, main
from voxnav.mapping import GlobalGrid


CHEAP_YAML = """\
world:
  obstacle_count: 0
camera:
  width: 8
  height: 8
episode:
  feature_rows: 4
  feature_cols: 4
  grid_resolution: 0.5
"""


@pytest.fixture
def cheap_cfg_file(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(CHEAP_YAML)
    return str(path)


# -- run ----------------------------------------------------------------------

def test_run_outputs_and_determinism(tmp_path, cheap_cfg_file, capsys):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main(["run", "--config", cheap_cfg_file, "--seed", "7",
                     "--policy", "static", "--out", str(out)])
        assert code == EXIT_OK
        outs.append(out)
    for fname in ("trajectory.jsonl", "world.json", "summary.json",
                  "grid.bin", "grid_summary.json"):
        assert (outs[0] / fname).exists()
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()
    summary = json.loads((outs[0] / "summary.json").read_text())
    assert summary["outcome"] == "success"    # empty world, goal seeker


def test_run_crash_is_exit_zero(tmp_path, cheap_cfg_file):
    out = tmp_path / "r"
    code = main(["run", "--config", cheap_cfg_file, "--seed", "3",
                 "--policy", "random", "--out", str(out),
                 "--obstacles", "0"])
    assert code == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["outcome"] in ("success", "crash", "timeout")


def test_run_unknown_policy_usage_error(tmp_path, cheap_cfg_file, capsys):
    code = main(["run", "--config", cheap_cfg_file, "--policy", "bogus",
                 "--out", str(tmp_path / "x")])
    assert code == EXIT_USAGE
    assert "available" in capsys.readouterr().err


def test_malformed_config_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("world:\n  obstaclecount: 3\n")
    code = main(["run", "--config", str(bad), "--out", str(tmp_path / "x")])
    assert code == EXIT_USAGE
    assert "world.obstaclecount" in capsys.readouterr().err


def test_missing_required_flag_exit_2(capsys):
    assert main(["run"]) == EXIT_USAGE
    assert main(["bogus-command"]) == EXIT_USAGE


def test_internal_error_exit_3(tmp_path, cheap_cfg_file, monkeypatch,
                               capsys):
    import voxnav.cli as cli

    def boom(args):
        raise RuntimeError("boom")

    # main() rebuilds its parser, so the patched handler is picked up
    monkeypatch.setattr(cli, "cmd_run", boom)
    code = cli.main(["run", "--config", cheap_cfg_file,
                     "--out", str(tmp_path / "x")])
    assert code == EXIT_INTERNAL
    assert "boom" in capsys.readouterr().err


# -- eval ---------------------------------------------------------------------

def test_eval_csv_shape_and_partition(tmp_path, cheap_cfg_file, capsys):
    out = tmp_path / "table.csv"
    code = main(["eval", "--config", cheap_cfg_file, "--seed", "11",
                 "--policy", "static", "--out", str(out),
                 "--obstacles", "0,2,4,6", "--episodes", "3"])
    assert code == EXIT_OK
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "condition,success,timeout,crash,exploration,errors"
    assert len(lines) == 5
    for line in lines[1:]:
        parts = line.split(",")
        assert float(parts[1]) + float(parts[2]) + float(parts[3]) \
            == pytest.approx(1.0, abs=1e-12)
        assert parts[5] == "0"


def test_eval_worker_count_byte_identical(tmp_path, cheap_cfg_file):
    texts = []
    for i, workers in enumerate(("1", "4")):
        out = tmp_path / f"t{i}.csv"
        code = main(["eval", "--config", cheap_cfg_file, "--seed", "5",
                     "--policy", "sweep", "--out", str(out),
                     "--obstacles", "0,3", "--episodes", "4",
                     "--workers", workers])
        assert code == EXIT_OK
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]


def test_eval_usage_errors(tmp_path, cheap_cfg_file, capsys):
    out = str(tmp_path / "t.csv")
    assert main(["eval", "--config", cheap_cfg_file, "--out", out,
                 "--obstacles", "", "--episodes", "2"]) == EXIT_USAGE
    assert main(["eval", "--config", cheap_cfg_file, "--out", out,
                 "--policy", "bogus", "--episodes", "2"]) == EXIT_USAGE
    assert main(["eval", "--config", cheap_cfg_file, "--out", out,
                 "--episodes", "0"]) == EXIT_USAGE


# -- export -------------------------------------------------------------------

def test_export_round_trip(tmp_path, cheap_cfg_file, capsys):
    run_out = tmp_path / "run"
    main(["run", "--config", cheap_cfg_file, "--seed", "9",
          "--policy", "sweep", "--out", str(run_out)])
    exp_out = tmp_path / "exp"
    code = main(["export", "--log", str(run_out / "trajectory.jsonl"),
                 "--out", str(exp_out)])
    assert code == EXIT_OK

    log_lines = (run_out / "trajectory.jsonl").read_text().strip().split("\n")
    n_steps = sum(1 for ln in log_lines
                  if json.loads(ln)["type"] == "step")
    pose_lines = (exp_out / "poses.csv").read_text().strip().split("\n")
    assert len(pose_lines) == n_steps + 1
    assert pose_lines[0] == "step,x,y,z,qw,qx,qy,qz,beta,gamma"

    # replayed grid snapshot matches the original run byte for byte
    assert (exp_out / "grid.bin").read_bytes() \
        == (run_out / "grid.bin").read_bytes()
    summary = json.loads((exp_out / "grid_summary.json").read_text())
    grid = GlobalGrid.load_snapshot(exp_out / "grid.bin")
    assert summary["free"] == int(grid.counts[1])
    assert summary["occupied"] == int(grid.counts[2])
    assert summary["exploration_fraction"] \
        == pytest.approx(grid.exploration_fraction())


def test_export_missing_log(tmp_path, capsys):
    assert main(["export", "--log", str(tmp_path / "none.jsonl"),
                 "--out", str(tmp_path / "o")]) == EXIT_USAGE
