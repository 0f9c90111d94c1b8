"""End-to-end checks of the eqgmm command-line tool: exit codes, output
naming, evaluate on identical inputs, and byte-identical reruns."""

import json
import os
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("EQGMM_CLI", "eqgmm")
DATA = Path(os.environ.get("EQGMM_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))
WINE = DATA / "wine.csv"


def run(*args, cwd=None):
    return subprocess.run([CLI, *map(str, args)], cwd=cwd, capture_output=True, text=True)


@pytest.fixture
def points(tmp_path):
    p = tmp_path / "points.csv"
    p.write_text("x,y\n1,2\n1.5,2.5\n9,9\n9.5,8\n1.2,2.2\n9.1,8.7\n0.8,1.7\n8.8,9.3\n")
    return p


def test_malformed_csv_is_a_data_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,oops\n")
    r = run("fit", "-i", bad, "-G", "2")
    assert r.returncode == 3
    assert "row 2, column 2" in r.stderr


def test_ragged_and_missing_files_are_data_errors(tmp_path):
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2\n3\n")
    assert run("fit", "-i", ragged).returncode == 3
    assert run("fit", "-i", tmp_path / "absent.csv").returncode == 3


def test_bad_configuration_exits_2(points, tmp_path):
    assert run("fit", "-i", points, "--header", "-G", "2", "-m", "conN", "-c", "1.5").returncode == 2
    assert run("fit", "-i", points, "--header", "-m", "nonsense").returncode == 2
    assert run("fit", "--no-such-flag").returncode == 2
    cfg = tmp_path / "bad.toml"
    cfg.write_text(f'[fit]\ninput = "{points}"\nheader = true\ncomponents = 0\n')
    assert run("--config", cfg, "fit").returncode == 2


def test_evaluate_identical_labels_and_posteriors(tmp_path):
    labels = tmp_path / "labels.csv"
    labels.write_text("1\n1\n2\n3\n3\n")
    r = run("evaluate", "--truth", labels, "--estimate", labels)
    assert r.returncode == 0
    assert json.loads(r.stdout)["arand"] == 1.0
    post = tmp_path / "post.csv"
    post.write_text("0.9,0.1\n0.2,0.8\n0.6,0.4\n")
    out = tmp_path / "eval.json"
    assert run("evaluate", "--truth", post, "--estimate", post, "-o", out).returncode == 0
    result = json.loads(out.read_text())
    assert result["mad"] == 0.0 and result["arand"] == 1.0


def test_fit_with_c_one_returns_target_covariances(points, tmp_path):
    out = tmp_path / "fit.json"
    r = run("fit", "-i", points, "--header", "-G", "2", "-m", "conN", "-c", "1", "--starts", "3", "-o", out)
    assert r.returncode == 0, r.stderr
    doc = json.loads(out.read_text())
    psi = doc["psi"]
    for cov in doc["params"]["covariances"]:
        for row, prow in zip(cov, psi):
            for a, b in zip(row, prow):
                assert abs(a - b) <= 1e-8 * (1 + abs(b))


def test_default_output_name(points, tmp_path):
    r = run("fit", "-i", points, "--header", "-G", "2", "-m", "homN", "-s", "5", "--out-dir", tmp_path)
    assert r.returncode == 0, r.stderr
    names = [p.name for p in tmp_path.glob("fit-*.json")]
    assert names == ["fit-points-G2-homN-5.json"]


def test_tune_single_point_grid_and_rerun_is_byte_identical(tmp_path):
    args = ["tune", "-i", WINE, "--label-column", "0", "-G", "3", "-m", "conN", "--starts", "3", "-K", "3"]
    one = tmp_path / "one.json"
    assert run(*args, "--c-grid", "0.3", "-o", one).returncode == 0
    assert json.loads(one.read_text())["curve"]["selected_c"] == 0.3
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(*args, "-o", a).returncode == 0
    assert run(*args, "-o", b).returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_csv_report_is_reproducible(tmp_path):
    args = ["simulate", "-n", "40", "-J", "3", "-p", "0.5,0.5", "-r", "3", "--methods", "homN,cont", "-q",
            "--format", "csv"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(*args, "-o", a).returncode == 0
    assert run(*args, "-o", b).returncode == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "scenario_id,method,replication,metric,value"
    assert any(",cont,all,mean_arand," in line for line in lines)
