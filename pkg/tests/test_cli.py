"""Command line behavior: exit codes, output routing, determinism."""

import subprocess
import sys

import pytest

from tpmhd.cli import main

GOOD_TEXT = """
experiment = spinodal
case = I
n = 6
dt = 0.001
T_final = 0.002
gamma = 0.01
mobility = 0.01
lambda = 0.01
seed = 2
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_success_exit_zero(tmp_path):
    cfg = write_cfg(tmp_path, GOOD_TEXT)
    out = tmp_path / "out"
    assert main(["spinodal", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "spinodal_diagnostics.csv").exists()


def test_missing_config_exit_one(tmp_path):
    missing = str(tmp_path / "absent.cfg")
    assert main(["spinodal", "--config", missing]) == 1


def test_malformed_config_exit_one(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "experiment = spinodal\nn = -3\n")
    assert main(["spinodal", "--config", cfg]) == 1
    err = capsys.readouterr().err
    assert "line 2" in err


def test_unknown_key_exit_one(tmp_path, capsys):
    cfg = write_cfg(tmp_path, GOOD_TEXT + "mystery = 1\n")
    assert main(["spinodal", "--config", cfg]) == 1
    assert "mystery" in capsys.readouterr().err


def test_experiment_mismatch_exit_one(tmp_path, capsys):
    cfg = write_cfg(tmp_path, GOOD_TEXT)
    assert main(["kh", "--config", cfg]) == 1
    assert "spinodal" in capsys.readouterr().err


HARD_TEXT = """
experiment = spinodal
case = I
n = 6
dt = 0.5
T_final = 0.5
gamma = 0.01
seed = 2
newton_max = 1
"""


def test_solver_failure_exit_two(tmp_path, capsys):
    cfg = write_cfg(tmp_path, HARD_TEXT)
    out = tmp_path / "out"
    assert main(["spinodal", "--config", cfg, "--out", str(out)]) == 2
    assert "solver" in capsys.readouterr().err
    partial = (out / "spinodal_diagnostics.csv").read_text().splitlines()
    assert len(partial) == 2


def test_out_defaults_to_config_output_dir(tmp_path):
    target = tmp_path / "routed"
    cfg = write_cfg(tmp_path, GOOD_TEXT + f"output_dir = {target}\n")
    assert main(["spinodal", "--config", cfg]) == 0
    assert (target / "spinodal_diagnostics.csv").exists()


def test_out_flag_overrides_config(tmp_path):
    ignored = tmp_path / "ignored"
    used = tmp_path / "used"
    cfg = write_cfg(tmp_path, GOOD_TEXT + f"output_dir = {ignored}\n")
    assert main(["spinodal", "--config", cfg, "--out", str(used)]) == 0
    assert (used / "spinodal_diagnostics.csv").exists()
    assert not ignored.exists()


def test_rerun_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, GOOD_TEXT)
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(["spinodal", "--config", cfg, "--out", str(a)]) == 0
    assert main(["spinodal", "--config", cfg, "--out", str(b)]) == 0
    assert ((a / "spinodal_diagnostics.csv").read_bytes()
            == (b / "spinodal_diagnostics.csv").read_bytes())


def test_module_invocation(tmp_path):
    cfg = write_cfg(tmp_path, GOOD_TEXT)
    out = tmp_path / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "tpmhd.cli", "spinodal",
         "--config", cfg, "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert (out / "spinodal_diagnostics.csv").exists()
