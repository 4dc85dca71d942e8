import io
import json
import subprocess
import sys

import pytest

from nonlocal_calculus.cli import ConfigError, ExperimentConfig, config_from_args, main


def run_cli(args):
    out, err = io.StringIO(), io.StringIO()
    code = main(args, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_eval_linear_divergence():
    code, out, _ = run_cli(
        "eval --op div --field linear --A 2,0,0,3 --at 0.3,0.7 --n 2 --p 1 --delta 0.1".split()
    )
    assert code == 0
    assert float(out) == pytest.approx(5.0, abs=1e-9)


def test_check_kernel_second_moment_rows():
    code, out, _ = run_cli("check-kernel --n 2 --p 1 --delta 0.5".split())
    assert code == 0
    rows = [line.split(",") for line in out.strip().split("\n")]
    assert rows[0] == ["quantity", "alpha", "j", "a", "numeric", "exact", "abs_error"]
    second = [r for r in rows if r[0] == "second_moment"]
    assert len(second) == 2
    for r in second:
        assert abs(float(r[4]) - 1.0) <= 1e-10
    la = [r for r in rows if r[0] == "la_norm"]
    assert [float(r[3]) for r in la] == [1.0, 1.2]


def test_converge_writes_csv_and_json(tmp_path):
    csv_path, json_path = tmp_path / "r.csv", tmp_path / "r.json"
    code, out, _ = run_cli(
        ["converge", "--field", "gaussian", "--op", "grad", "--n", "1", "--p", "0.5", "--q", "2",
         "--deltas", "0.4,0.2,0.1,0.05", "--csv", str(csv_path), "--json", str(json_path)]
    )
    assert code == 0
    lines = csv_path.read_text().strip().split("\n")
    assert lines[0] == "delta,q,error,sobolev_norm,bound,ratio"
    assert len(lines) == 5
    assert out == csv_path.read_text()
    rep = json.loads(json_path.read_text())["reports"][0]
    assert 1.9 <= rep["fitted_order"] <= 2.1
    assert set(rep["grid"]) == {"box", "resolution"}
    assert set(rep["quadrature"]) == {"radial_order", "angular_order"}


def test_maximal_command():
    code, out, _ = run_cli("maximal --field gaussian --n 1 --b 2 --resolution 401".split())
    assert code == 0
    rep = json.loads(out)
    assert rep["ratio"] > 1.0 and rep["grid"]["resolution"] == [401]


def test_error_records_and_exit_codes():
    code, _, err = run_cli("converge --field gaussian --op grad --n 1 --p 0.5 --bogus 3".split())
    assert code == 2
    rec = json.loads(err)
    assert rec["status"] == "error" and rec["exit_code"] == 2
    code, _, err = run_cli("eval --op div --field linear --n 2 --p 2.5 --delta 0.1 --at 0,0".split())
    assert code == 2 and "p" in json.loads(err)["message"]
    code, _, err = run_cli("eval --op grad --field gaussian --n 1 --p 0.5 --at 0".split())
    assert code == 2 and "--delta" in json.loads(err)["message"]
    code, _, _ = run_cli("eval --op div --field gaussian --n 1 --p 0.5 --delta 0.1 --at 0 --width 1 --A 1".split())
    assert code == 2


def test_numeric_failure_exit_code():
    # a NaN width makes every field value non-finite
    code, _, err = run_cli("eval --op grad --field gaussian --n 1 --p 0.5 --delta 0.1 --at 0 --width nan".split())
    assert code == 3
    assert json.loads(err)["exit_code"] == 3


def test_no_abbreviated_flags():
    with pytest.raises(ConfigError):
        config_from_args("eval --op div --fie linear --n 2 --p 1 --delta 0.1 --at 0,0".split())


def test_config_file_and_flag_precedence(tmp_path):
    cfg = ExperimentConfig(command="converge", n=1, p=0.5, field="gaussian", op="grad", q=[1.0, float("inf")])
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    merged = config_from_args(["converge", "--config", str(path), "--p", "0.25"])
    assert merged.p == 0.25 and merged.q == [1.0, float("inf")] and merged.field == "gaussian"
    path.write_text(json.dumps({"n": 1, "flavour": "x"}))
    code, _, err = run_cli(["converge", "--config", str(path)])
    assert code == 2 and "flavour" in err


def test_config_round_trip():
    cfg = ExperimentConfig(command="maximal", n=2, p=1.0, q=[1.0, 2.0, float("inf")], box=[-1.0, 1.0, 0.0, 2.0], radii=[0.5, 0.25])
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "nonlocal_calculus", "eval", "--op", "grad", "--field", "quadratic",
         "--n", "1", "--p", "0.5", "--delta", "0.2", "--at", "0.25"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert float(proc.stdout) == pytest.approx(0.5, abs=1e-9)
