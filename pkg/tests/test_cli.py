import json
import subprocess
import sys

import pytest

from empldp.cli import parse_and_dispatch


def run(argv, capsys):
    code = parse_and_dispatch(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bound_json(capsys):
    code, out, _ = run(["bound", "--epsilon", "0.5", "--n", "10000"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == "1"
    assert doc["config"] == {"dist": "uniform", "epsilon": 0.5, "n": 10000, "seed": 0}
    assert doc["bound"] == pytest.approx(0.175183, abs=1e-6)
    assert doc["trivial"] is False
    assert set(doc) >= {"epsilon", "n", "delta", "lambda_star", "T", "bound", "trivial"}


def test_bound_domain_error(capsys):
    code, out, err = run(["bound", "--epsilon", "1.5", "--n", "10"], capsys)
    assert code == 1 and out == ""
    assert "epsilon <= 1" in err


def test_trivial_bound_warns(capsys):
    code, _, err = run(["bound", "--epsilon", "0.1", "--n", "100"], capsys)
    assert code == 0 and "trivial" in err


def test_usage_errors(capsys):
    assert run(["ldp-scan", "--alpha", "0.25", "--epsilon", "0.5"], capsys)[0] == 2
    code, _, err = run(["frobnicate"], capsys)
    assert code == 2 and "usage" in err
    assert run(["bound", "--epsilon", "abc", "--n", "3"], capsys)[0] == 2
    assert run([], capsys)[0] == 2


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nseed=7\nn=12\n\ndist = pow:2\n")
    _, out, _ = run(["simulate", "--config", str(cfg), "--seed", "9"], capsys)
    doc = json.loads(out)
    assert doc["config"]["seed"] == 9
    assert doc["config"]["n"] == 12
    assert doc["config"]["dist"] == "pow:2"


def test_empty_config_gives_defaults(tmp_path, capsys):
    cfg = tmp_path / "empty.cfg"
    cfg.write_text("")
    _, a, _ = run(["simulate", "--config", str(cfg), "--n", "5"], capsys)
    _, b, _ = run(["simulate", "--n", "5"], capsys)
    assert a == b


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("seed=1\nthis line is wrong\n")
    code, _, err = run(["simulate", "--config", str(bad), "--n", "5"], capsys)
    assert code == 2 and ":2:" in err
    unk = tmp_path / "unk.cfg"
    unk.write_text("colour=blue\n")
    code, _, err = run(["simulate", "--config", str(unk), "--n", "5"], capsys)
    assert code == 2 and "colour" in err
    code, _, _ = run(["simulate", "--config", str(tmp_path / "missing.cfg"), "--n", "5"], capsys)
    assert code == 2


def test_env_seed(monkeypatch, capsys):
    monkeypatch.setenv("EMPLDP_SEED", "31")
    _, out, _ = run(["simulate", "--n", "3"], capsys)
    assert json.loads(out)["config"]["seed"] == 31
    _, out, _ = run(["simulate", "--n", "3", "--seed", "2"], capsys)
    assert json.loads(out)["config"]["seed"] == 2


def test_out_and_csv_files(tmp_path, capsys):
    out, csv = tmp_path / "r.json", tmp_path / "r.csv"
    code, stdout, _ = run(["ldp-scan", "--alpha", "0.25", "--epsilon", "0.5", "--n", "64,256",
                           "--out", str(out), "--csv", str(csv)], capsys)
    assert code == 0 and stdout == ""
    doc = json.loads(out.read_text())
    assert [r["n"] for r in doc["records"]] == [64, 256]
    lines = csv.read_text().splitlines()
    assert lines[0] == "# schema_version=1"
    assert lines[1] == "n,d,p,log_normalized,target"
    assert len(lines) == 4


def test_rate_round_trip(tmp_path, capsys):
    path = tmp_path / "u.csv"
    code, _, _ = run(["rate", "--optimal", "--epsilon", "0.1", "--csv", str(path)], capsys)
    assert code == 0
    code, out, _ = run(["rate", "--path", str(path)], capsys)
    doc = json.loads(out)
    assert doc["J"] == pytest.approx(0.02, abs=1e-8)
    assert doc["residual"] <= 1e-6
    assert run(["rate"], capsys)[0] == 2


def test_every_subcommand_runs(capsys):
    cmds = [
        ["simulate", "--n", "20"],
        ["exact-tail", "--n", "100", "--d", "0.1"],
        ["mc", "--n", "50", "--d", "0.2", "--trials", "2000"],
        ["mc", "--n", "50", "--d", "0.2", "--trials", "2000", "--tilt", "0.1"],
        ["pointwise-scan", "--alpha", "0.25", "--epsilon", "0.5", "--n", "100,1000"],
        ["limit", "--grid", "65", "--trials", "200", "--method", "sde"],
        ["expgap", "--n", "200", "--trials", "20"],
        ["decompose", "--n", "40", "--dist", "pow:2"],
    ]
    for argv in cmds:
        code, out, _ = run(argv, capsys)
        assert code == 0, argv
        doc = json.loads(out)
        assert doc["command"] == argv[0] and "config" in doc
        code, out, _ = run(argv + ["--format", "csv"], capsys)
        assert code == 0 and out.startswith("# schema_version=1")


def test_decompose_residuals(capsys):
    _, out, _ = run(["decompose", "--n", "50"], capsys)
    assert max(json.loads(out)["residuals"].values()) <= 1e-10


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "empldp", "exact-tail", "--n", "1", "--d", "0.6"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["records"][0]["probability"] == pytest.approx(0.8)
