import csv
import json
import math
import os
import subprocess
from pathlib import Path

import jsonschema
import numpy as np
import pytest

import optsurr

CLI = os.environ.get("OPTSURR_CLI")
SCHEMAS = Path(os.environ.get("OPTSURR_SCHEMAS", Path(__file__).resolve().parents[2] / "schemas"))
FAST = {"B": 40, "grid_points": 256, "seed": 11}


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


def write_csv(path, y, s, a, header=("y", "s", "a")):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(zip(y, s, a))
    return path


@pytest.fixture(scope="module")
def setting1():
    return optsurr.simulate(1, 1200, seed=7, t=0.8522)


@pytest.fixture(scope="module")
def setting1_csv(tmp_path_factory, setting1):
    path = tmp_path_factory.mktemp("data") / "setting1.csv"
    return write_csv(path, setting1["y"], setting1["s"], setting1["a"])


@pytest.fixture(scope="module")
def report(setting1):
    return optsurr.analyze(setting1["y"], setting1["s"], setting1["a"], with_comparators=True, **FAST)


def run_cli(*args):
    if not CLI:
        pytest.skip("OPTSURR_CLI not set")
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, timeout=600)


def test_power_matches_closed_form():
    phi = lambda x: 0.5 * math.erfc(-x / math.sqrt(2))
    assert optsurr.power(0.28, 100) == pytest.approx(phi(2.8 - 1.96), abs=1e-12)
    assert round(optsurr.power(0.28, 100), 4) == 0.7995
    assert optsurr.solve_sample_size(0.3, 0.2, 100, 1.0) == 45
    assert optsurr.relative_power(0.3, 0.2, 45, 100) >= 1.0


def test_errors_map_to_python_exceptions():
    with pytest.raises(optsurr.InfeasibleError):
        optsurr.solve_sample_size(-0.1, 0.2, 100, 1.0)
    with pytest.raises(optsurr.InputError):
        optsurr.analyze([0.0, 1.0], [0.5, 0.7], [0, 2])
    assert issubclass(optsurr.InputError, ValueError)


def test_simulate_returns_columns(setting1):
    assert len(setting1["y"]) == len(setting1["s"]) == len(setting1["a"]) == 1200
    assert set(np.unique(setting1["a"])) == {0, 1}


def test_analyze_report_is_populated_and_valid(report):
    jsonschema.validate(report, schema("analysis_report"))
    assert 0.0 < report["cv"]["pte"]["point"] < 1.0
    assert [r["n_bar"] for r in report["cv"]["rp"]] == [50, 100, 150]
    assert report["diagnostics"]["u_grid"]
    assert report["comparators"]["method"] == "linear least squares"


def test_analyze_is_reproducible(setting1, report):
    again = optsurr.analyze(setting1["y"], setting1["s"], setting1["a"], with_comparators=True, **FAST)
    assert json.dumps(again, sort_keys=True) == json.dumps(report, sort_keys=True)


def test_design_from_report(report):
    d = optsurr.design(report, 50, 0.5)
    jsonschema.validate(d, schema("design_result"))
    assert d["n_star"] >= 1
    assert d["achieved"] >= 0.5
    assert "carry over" in d["assumption"]


def test_truth_and_calibration():
    truth = optsurr.truth(1, t=0.8522, grid_points=4001)
    assert truth["pte"] == pytest.approx(0.657, abs=2e-3)
    assert optsurr.calibrate_t(1, 0.657) == pytest.approx(0.8522, rel=2e-3)


def test_cli_analyze_fan_out_and_schema(tmp_path, setting1_csv):
    out = tmp_path / "report.json"
    res = run_cli("analyze", "--data", setting1_csv, "--B", 30, "--grid", 256, "--n-bar", "50,100,150", "--out", out)
    assert res.returncode == 0, res.stderr
    assert "PTE_CV" in res.stdout
    rep = json.loads(out.read_text())
    jsonschema.validate(rep, schema("analysis_report"))
    assert len(rep["cv"]["rp"]) == 3


def test_cli_design_targets(tmp_path, setting1_csv):
    rep = tmp_path / "report.json"
    assert run_cli("analyze", "--data", setting1_csv, "--B", 30, "--grid", 256, "--out", rep).returncode == 0
    out = tmp_path / "design.json"
    res = run_cli("design", "--report", rep, "--rho", 1, "--design-n-bar", 50, "--out", out)
    assert res.returncode == 0, res.stderr
    assert "Assumption:" in res.stdout
    d = json.loads(out.read_text())
    jsonschema.validate(d, schema("design_result"))
    assert d["n_star"] < 50
    res = run_cli("design", "--report", rep, "--kappa", 10, "--design-n-bar", 50)
    assert res.returncode == 3
    assert "NoFeasibleN" in res.stderr


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("y,x,a\n1,2,0\n")
    res = run_cli("analyze", "--data", bad)
    assert res.returncode == 1
    assert "MissingColumn" in res.stderr

    rng = np.random.default_rng(4)
    a = np.repeat([0, 1], 200)
    s = np.where(a == 1, rng.uniform(5, 6, a.size), rng.uniform(0, 1, a.size))
    y = s + rng.normal(size=a.size)
    apart = write_csv(tmp_path / "apart.csv", y, s, a)
    res = run_cli("analyze", "--data", apart, "--B", 20)
    assert res.returncode == 2
    assert "NoOverlap" in res.stderr


def test_cli_simulate(tmp_path):
    out = tmp_path / "study.json"
    res = run_cli("simulate", "--setting", 4, "--reps", 2, "--n", 600, "--no-perturb", "--out", out)
    assert res.returncode == 0, res.stderr
    assert "| Estimand | True | Est | ESE | ASE | CP |" in res.stdout
    study = json.loads(out.read_text())
    jsonschema.validate(study, schema("study_summary"))
    assert any("D0" in note for note in study["notes"])

    res = run_cli("simulate", "--setting", 9)
    assert res.returncode != 0
    assert "setting" in res.stderr.lower()
