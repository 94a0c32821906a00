import json

import numpy as np
import pytest

from factorbreak import load_panel
from factorbreak.cli import main


@pytest.fixture(scope="module")
def cv_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cv") / "table.json"
    code = main([
        "critvals", "--grid-size", "500", "--replications", "10000",
        "--seed", "99", "--out", str(path),
    ])
    assert code == 0
    return str(path)


@pytest.fixture(scope="module")
def change_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim") / "panel.csv"
    code = main([
        "simulate", "--n", "400", "--p", "12", "--gamma0", "0.5",
        "--seed", "78", "--out", str(out),
    ])
    assert code == 0
    return str(out)


def test_simulate_outputs(tmp_path):
    out = tmp_path / "panel.csv"
    truth = tmp_path / "truth.json"
    code = main([
        "simulate", "--n", "60", "--p", "4", "--gamma0", "0.4",
        "--seed", "5", "--out", str(out), "--truth-out", str(truth),
    ])
    assert code == 0
    panel = load_panel(str(out))
    assert panel.n == 60 and panel.p == 4
    payload = json.loads(truth.read_text())
    assert payload["gamma0"] == 0.4 and payload["r0"] == 24
    for f in payload["loadings_files"]:
        assert np.loadtxt(f, delimiter=",").shape == (4, 3)


def test_simulate_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main([
            "simulate", "--n", "50", "--p", "3", "--seed", "9", "--out", str(path),
        ]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_test_subcommand(tmp_path, cv_file, change_csv):
    out = tmp_path / "test.json"
    code = main([
        "test", "--input", change_csv, "--critvals-file", cv_file,
        "--k1", "3", "--k2", "3", "--out", str(out),
    ])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["schema_version"] == 1
    assert payload["reject"]["0.05"] is True
    assert 0.0 <= payload["p_value"] <= 1.0


def test_locate_subcommand(tmp_path, change_csv):
    out = tmp_path / "fit.json"
    prefix = str(tmp_path / "loadings")
    code = main([
        "locate", "--input", change_csv, "--k1", "3", "--k2", "3",
        "--out", str(out), "--export-loadings", prefix,
    ])
    assert code == 0
    payload = json.loads(out.read_text())
    assert 0.1 < payload["gamma_hat"] < 0.9
    assert abs(payload["gamma_hat"] - 0.5) < 0.1
    q1 = np.loadtxt(prefix + "_q1.csv", delimiter=",")
    assert q1.shape == (12, 3)


def test_fit_subcommand_rejects_and_locates(tmp_path, cv_file, change_csv):
    out = tmp_path / "fit.json"
    code = main([
        "fit", "--input", change_csv, "--critvals-file", cv_file,
        "--k1", "3", "--k2", "3", "--out", str(out),
    ])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["test"]["reject"]["0.05"] is True
    assert payload["fit"] is not None
    assert abs(payload["fit"]["gamma_hat"] - 0.5) < 0.1


def test_fit_without_rejection_skips_locate(tmp_path, cv_file):
    src = tmp_path / "null.csv"
    assert main([
        "simulate", "--n", "400", "--p", "12", "--seed", "42", "--out", str(src),
    ]) == 0
    out = tmp_path / "fit.json"
    assert main([
        "fit", "--input", str(src), "--critvals-file", cv_file,
        "--k1", "3", "--k2", "3", "--out", str(out),
    ]) == 0
    payload = json.loads(out.read_text())
    assert payload["fit"] is None
    forced = tmp_path / "forced.json"
    assert main([
        "fit", "--input", str(src), "--critvals-file", cv_file,
        "--k1", "3", "--k2", "3", "--force-locate", "--out", str(forced),
    ]) == 0
    assert json.loads(forced.read_text())["fit"] is not None


def test_eta_order_config_error(change_csv, capsys):
    code = main([
        "locate", "--input", change_csv, "--eta1", "0.6", "--eta2", "0.4",
    ])
    assert code == 2
    assert "eta1 must be < eta2" in capsys.readouterr().err


def test_bad_k_config_error(change_csv):
    assert main(["locate", "--input", change_csv, "--k1", "zero"]) == 2
    assert main(["locate", "--input", change_csv, "--k1", "0"]) == 2


def test_missing_input_module_error(tmp_path, cv_file):
    code = main([
        "test", "--input", str(tmp_path / "none.csv"), "--critvals-file", cv_file,
    ])
    assert code == 1


def test_unknown_subcommand_usage_error():
    assert main(["frobnicate"]) == 2


def test_center_flag(tmp_path, change_csv):
    # centering must not derail location on a mean-zero panel
    out = tmp_path / "fit.json"
    code = main([
        "locate", "--input", change_csv, "--center", "--k1", "3", "--k2", "3",
        "--out", str(out),
    ])
    assert code == 0


def test_bench_subcommand(tmp_path, cv_file):
    plan = {
        "cells": [
            {"n": 120, "p": 6, "setting": "null-strong", "replications": 2, "seed": 1},
            {"n": 120, "p": 6, "setting": "SS", "replications": 2, "seed": 2},
        ]
    }
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(json.dumps(plan))
    out_dir = tmp_path / "out"
    code = main([
        "bench", "--plan", str(plan_path), "--out-dir", str(out_dir),
        "--threads", "1", "--critvals-file", cv_file,
    ])
    assert code == 0
    for name in ("table1.csv", "table2.csv", "table3.csv", "table4.csv",
                 "histogram_gamma.csv", "report.json"):
        assert (out_dir / name).exists(), name
    report = json.loads((out_dir / "report.json").read_text())
    assert report["size"]["rows"][0]["n"] == 120
    # byte-identical rerun
    out2 = tmp_path / "out2"
    assert main([
        "bench", "--plan", str(plan_path), "--out-dir", str(out2),
        "--threads", "1", "--critvals-file", cv_file,
    ]) == 0
    assert (out2 / "report.json").read_bytes() == (out_dir / "report.json").read_bytes()
