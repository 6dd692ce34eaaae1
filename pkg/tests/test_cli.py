import json
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from fdedep.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main([*argv, "-o", str(out)])
    return code, out


def test_solve_constant_problem(tmp_path, capsys):
    code, out = run(tmp_path, "solve", str(CONFIGS / "constant.json"))
    assert code == 0
    assert {p.name for p in out.iterdir()} == {"manifest.json", "trajectory.csv", "diagnostics.json"}
    data = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1)
    assert np.all(data[:, 1] == data[0, 1])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["command"] == "solve" and manifest["config"]["tol"] == 1e-10
    assert "Completed" in capsys.readouterr().out


def test_solve_reports_stall_with_exit_1(tmp_path):
    src = tmp_path / "blow.json"
    src.write_text(json.dumps({"rhs": "x(t-0)^2", "phi": "1", "horizon": 2.0, "h": 0.001}))
    code, out = run(tmp_path, "solve", str(src))
    assert code == 1
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["status"] == "Stalled"


def test_null_family(tmp_path):
    code, out = run(tmp_path, "family", str(CONFIGS / "null_family.json"), "--k-max", "4096")
    assert code == 0
    rows = np.loadtxt(out / "dependence.csv", delimiter=",", skiprows=1)
    assert np.all(rows[:, 1] == 0.0)
    assert np.max(rows[:, 4]) <= 2e-10


def test_check_seq_power_is_refuted_near_one(tmp_path, capsys):
    code, out = run(tmp_path, "check-seq", str(CONFIGS / "seq_power.json"), "--k-max", "4096")
    assert code == 1
    v = json.loads((out / "verdicts.json").read_text())["verdicts"]
    assert v["pointwise"]["tag"] == "Refuted"  # the file's limit is 0 also at x = 1
    assert v["pointwise"]["witness"]["point"] == [1.0]
    assert abs(v["weak-exhaustive"]["witness"]["point"][0] - 1.0) < 0.05
    assert "Refuted" in capsys.readouterr().out


def test_check_seq_shift_passes(tmp_path):
    code, out = run(tmp_path, "check-seq", str(CONFIGS / "seq_shift.json"))
    assert code == 0
    m = json.loads((out / "verdicts.json").read_text())
    assert m["inconsistencies"] == []
    assert all(v["tag"] == "ConsistentUpTo" for v in m["verdicts"].values())


def test_parse_error_points_at_the_expression(tmp_path, capsys):
    src = tmp_path / "bad.json"
    src.write_text('{\n  "horizon": 1.0,\n  "phi": "1",\n  "rhs": "x(t-0) + * 2"\n}\n')
    code, _ = run(tmp_path, "solve", str(src))
    err = capsys.readouterr().err
    assert code == 2
    assert f"{src}:4:" in err


def test_json_syntax_error_has_line_and_column(tmp_path, capsys):
    src = tmp_path / "bad.json"
    src.write_text('{\n  "horizon": 1.0,\n  "phi": "1"\n  "rhs": "0"\n}\n')
    assert run(tmp_path, "solve", str(src))[0] == 2
    assert f"{src}:4:3:" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "missing.json"],
        ["solve", "IN", "--tol", "-1"],
        ["solve", "IN", "--eps-ladder", "0.01,0.1"],
        ["solve", "IN", "--eps-ladder", "a,b"],
        ["family", "IN", "--workers", "0"],
        ["check-seq", "IN", "--k-max", "2"],
        ["bogus"],
        [],
    ],
)
def test_usage_errors_exit_2(tmp_path, argv, capsys):
    argv = [str(CONFIGS / "constant.json") if a == "IN" else a for a in argv]
    if len(argv) > 1:
        argv += ["-o", str(tmp_path / "out")]
    assert main(argv) == 2
    assert not (tmp_path / "out").exists()


def test_missing_field_is_reported(tmp_path, capsys):
    src = tmp_path / "bad.json"
    src.write_text('{"phi": "1", "rhs": "0"}')
    assert run(tmp_path, "solve", str(src))[0] == 2
    assert "horizon" in capsys.readouterr().err


def test_console_script_version():
    exe = shutil.which("fde-dep")
    if exe is None:
        pytest.skip("console script not installed")
    out = subprocess.run([exe, "--version"], capture_output=True, text=True, check=True)
    assert out.stdout.strip().startswith("fde-dep ")
