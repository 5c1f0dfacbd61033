import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from cylbubble.cli import main
from cylbubble.ground_state import import_profile


def _manifest(path):
    return json.loads((path / "manifest.json").read_text())


def test_validate_default(tmp_path, capsys):
    assert main(["validate", "--out-dir", str(tmp_path)]) == 0
    m = _manifest(tmp_path)
    assert m["command"][:2] == ["cylbubble", "validate"]
    assert "validate.csv" in m["outputs"]
    rows = list(csv.DictReader((tmp_path / "validate.csv").open()))
    assert all(r["passed"] == "1" for r in rows)


def test_validate_failing_parameters(tmp_path):
    code = main(["validate", "--out-dir", str(tmp_path), "--set", "exponents.m1=2.0",
                 "--set", "exponents.m2=2.0"])
    assert code == 1


def test_config_errors_exit_2(tmp_path):
    assert main(["validate", "--out-dir", str(tmp_path), "--set", "exponents.N=five"]) == 2
    assert main(["validate", "--out-dir", str(tmp_path), "--set", "nosuchkey"]) == 2
    assert main(["no-such-command"]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("this is not ini\n")
    assert main(["validate", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2


def test_overrides_recorded_and_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("CYLBUBBLE_OUT_DIR", str(tmp_path))
    assert main(["geometry", "dump", "--set", "energy.k=3", "--seed", "7"]) == 0
    m = _manifest(tmp_path)
    assert m["overrides"] == ["energy.k=3"]
    assert m["seed"] == 7
    assert m["config"]["energy"]["k"] == "3"
    assert len((tmp_path / "geometry.csv").read_text().splitlines()) == 7


def test_ground_state_scalar_override(tmp_path):
    code = main(["ground-state", "--out-dir", str(tmp_path), "--set", "exponents.q=7/3",
                 "--set", "exponents.p=7/3"])
    assert code == 0
    gs = import_profile(tmp_path / "profile.txt")
    r = np.linspace(0, 100, 101)
    assert np.max(np.abs(gs.U(r) / (1 + r * r / 15) ** -1.5 - 1)) <= 1e-6


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["lemma-a1", "--set", "lemma_a1.distances=10,20", "--workers", "1"]
    assert main(args + ["--out-dir", str(a)]) == 0
    assert main(args + ["--out-dir", str(b)]) == 0
    assert (a / "lemma_a1.csv").read_bytes() == (b / "lemma_a1.csv").read_bytes()


def test_reduced_find(tmp_path):
    assert main(["reduced", "find", "--k", "20", "--out-dir", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "reduced_find.csv").open()))
    assert rows[0]["k"] == "20" and rows[0]["interior"] == "True"
    for col in ("r_star", "h_star", "Lambda_star", "c", "t1", "t2"):
        assert col in rows[0]


def test_verify_subset(tmp_path):
    assert main(["verify-all", "--criteria", "2,3", "--out-dir", str(tmp_path)]) == 0
    text = (tmp_path / "verify.txt").read_text()
    assert "criterion  2 [PASS]" in text and "criterion  3 [PASS]" in text


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "cylbubble.cli", "validate", "--out-dir",
                          str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.startswith("constraint,margin")
