import csv
import json

import numpy as np
import pytest

from ordinal_metric.cli import main


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture
def seg_files(tmp_path):
    s, r = tmp_path / "s.json", tmp_path / "r.json"
    assert run("sample", "--space", "segment", "--n", 5, "--mode", "grid", "--out", s) == 0
    assert run("reconstruct", "--sample", s, "--out", r) == 0
    return s, r


def test_sample_circle_grid(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert run("sample", "--space", "circle", "--n", 8, "--mode", "grid", "--out", out) == 0
    obj = json.loads(out.read_text())
    assert np.allclose(np.array(obj["points"]).ravel(), 2 * np.pi * np.arange(8) / 8)
    assert "d_H = 0.125" in capsys.readouterr().out


def test_sample_torus_reproducible(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run("sample", "--space", "torus", "--n", 128, "--seed", 7, "--out", path) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(json.loads(a.read_text())["points"]) == 128


@pytest.mark.parametrize("argv", [
    ["sample", "--space", "circle", "--n", "1", "--out", "x.json"],
    ["sample", "--space", "klein-bottle", "--n", "8", "--out", "x.json"],
    ["sample", "--space", "circle", "--n", "8"],
    ["sample", "--space", "box", "--sides", "1,-2", "--n", "8", "--out", "x.json"],
    ["frobnicate"],
])
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as info:
        code = main(argv)
        raise SystemExit(code)
    assert info.value.code == 64


def test_reconstruct_segment(seg_files):
    _, r = seg_files
    obj = json.loads(r.read_text())
    assert obj["p_n"] == 2
    truth = np.abs(np.subtract.outer(np.linspace(0, 1, 5), np.linspace(0, 1, 5)))
    assert np.array_equal(np.array(obj["d_plus"]), truth)
    assert obj["repair_t"] == 0
    assert obj["queries"] > 0


def test_reconstruct_byte_identical(seg_files, tmp_path):
    s, r = seg_files
    again = tmp_path / "r2.json"
    assert run("reconstruct", "--sample", s, "--out", again) == 0
    assert again.read_bytes() == r.read_bytes()


def test_reconstruct_two_points_exits_2(tmp_path):
    s = tmp_path / "s.json"
    assert run("sample", "--space", "circle", "--n", 2, "--out", s) == 0
    assert run("reconstruct", "--sample", s, "--out", tmp_path / "r.json") == 2


def test_evaluate_pass(seg_files, tmp_path):
    s, r = seg_files
    rep = tmp_path / "rep.json"
    assert run("evaluate", "--sample", s, "--result", r, "--out", rep) == 0
    obj = json.loads(rep.read_text())
    assert all(obj["passed"].values())
    assert obj["sup_err_plus"] == 0


def test_evaluate_tampered(seg_files, tmp_path):
    s, r = seg_files
    obj = json.loads(r.read_text())
    obj["d_plus"][1][3] += 0.5
    obj["d_plus"][3][1] += 0.5
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(obj))
    rep = tmp_path / "rep.json"
    assert run("evaluate", "--sample", s, "--result", bad, "--out", rep) == 1
    assert json.loads(rep.read_text())["passed"]["lemma3"] is False


def test_evaluate_missing_and_mismatched(seg_files, tmp_path):
    s, r = seg_files
    assert run("evaluate", "--sample", tmp_path / "nope.json", "--result", r) == 64
    other = tmp_path / "other.json"
    assert run("sample", "--space", "segment", "--n", 5, "--seed", 3, "--out", other) == 0
    assert run("evaluate", "--sample", other, "--result", r) == 64


def test_sweep_rows_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--space", "circle", "--n-list", "16,32", "--trials", 3, "--base-seed", 9]
    assert run(*args, "--out", a) == 0
    assert run(*args, "--out", b, "--workers", 2) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.DictReader(a.open()))
    assert len(rows) == 6
    summary = json.loads((tmp_path / "a.json").read_text())
    assert summary["rows"] == 6 and summary["all_theorem_checks_passed"]
    assert "fitted_exponent" in summary


def test_sweep_bad_n_list(tmp_path):
    assert run("sweep", "--space", "circle", "--n-list", "64,32", "--out", tmp_path / "x.csv") == 64


@pytest.mark.parametrize("cmd,needles", [
    ("reconstruct", ["ceil(log2 n) + 2", "d-plus", "0.0001"]),
    ("sweep", ["64,128,256,512", "default: 20", "d-plus", "0.0001"]),
    ("evaluate", ["0.0001"]),
])
def test_help_lists_defaults(cmd, needles, capsys):
    with pytest.raises(SystemExit) as info:
        main([cmd, "--help"])
    assert info.value.code == 0
    text = " ".join(capsys.readouterr().out.split())
    for needle in needles:
        assert needle in text
