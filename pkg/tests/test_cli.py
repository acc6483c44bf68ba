import json
import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from golden import BATTERY
from selfaffine.attractor import read_pgm
from selfaffine.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


@pytest.fixture
def cfg(tmp_path):
    def write(text, name="system.cfg"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


def test_classify_diag_pm(capsys, cfg):
    code, rep, _ = run(capsys, "classify", "--config", cfg("block real k=-0.9\nblock real k=0.9\n"))
    assert code == 0
    u = rep["verdicts"]["uniqueness"]
    assert u["verdict"] == "FiniteNonEmpty"
    assert u["beta"]["exact"] == "100/81" and abs(u["beta"]["decimal"] - 1.2346) < 1e-4
    assert rep["schema_version"] == 1 and rep["tool_version"]
    assert "G" in rep["constants"] and "beta_star" in rep["constants"]


def test_classify_jordan(capsys, cfg):
    code, rep, _ = run(capsys, "classify", "--config", cfg("block jordan k=1/2 size=2\n"))
    assert code == 0
    assert rep["verdicts"]["uniqueness"]["rule"] == "Jordan"
    assert rep["verdicts"]["uniqueness"]["verdict"] == "PositiveHausdorffDim"


@pytest.mark.parametrize("text,key", [
    ("block rotation r=0.95 angel=1/2pi\n", "angel"),
    ("block rotation r=0.95\n", "angle"),
    ("row 1/2 0\nrow 0 2\nu 1 1\n", "matrix"),
    ("row 1/2 0\nrow 0 1/3\n", "u"),
])
def test_malformed_config(capsys, cfg, text, key):
    code, rep, err = run(capsys, "classify", "--config", cfg(text))
    assert code == 1 and rep is None
    assert key in err


def test_missing_config_file(capsys, tmp_path):
    code, _, err = run(capsys, "classify", "--config", str(tmp_path / "nope.cfg"))
    assert code == 1 and "config" in err


def test_non_cyclic_matrix(capsys, cfg):
    code, _, err = run(capsys, "classify", "--config", cfg("row 1/2 0\nrow 0 1/3\nu 1 0\n"))
    assert code == 1 and "cyclic" in err


def test_constants(capsys):
    code, rep, _ = run(capsys, "constants", "--precision", "1e-8")
    assert code == 0
    b = rep["results"]["beta_star"]
    lo, hi = Fraction(b["lo"]), Fraction(b["hi"])
    assert hi - lo <= Fraction(1, 10**8)
    assert lo <= Fraction("1.78725") and hi >= Fraction("1.78715")


def test_unique_length_csv(capsys, tmp_path):
    out = tmp_path / "counts.csv"
    code, rep, _ = run(capsys, "unique", "--lambda", "4/5", "--length", "10",
                       "--format", "csv", "--output", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,N_n"
    assert [tuple(map(int, l.split(","))) for l in lines[1:]] == [(n, 2) for n in range(1, 11)]
    assert rep["artifacts"][0]["sha256"]


def test_unique_address(capsys):
    code, rep, _ = run(capsys, "unique", "--lambda", "1/2", "--address", "+(-)")
    assert code == 0
    cert = rep["verdicts"]["certification"]
    assert cert["status"] == "CollisionFound" and cert["witness"] == "-(+)"


def test_unique_strict(capsys):
    code, rep, _ = run(capsys, "unique", "--lambda", "4/5", "--address", "(+--)",
                       "--depth-cap", "20", "--strict")
    assert code == 2
    assert rep["verdicts"]["certification"]["status"] == "Undetermined"


def test_unique_free_tail_rejected(capsys):
    code, _, err = run(capsys, "unique", "--lambda", "1/2", "--address", "++-")
    assert code == 1 and "periodic" in err


def test_render_two_points(capsys, tmp_path):
    pts = tmp_path / "pts.csv"
    pts.write_text("0,0\n1,1\n")
    out = tmp_path / "img.pgm"
    code, rep, _ = run(capsys, "render", "--points", str(pts), "--viewport", "0,1,0,1",
                       "--resolution", "16x16", "--output", str(out))
    assert code == 0
    assert (read_pgm(out.read_bytes()) > 0).sum() == 2
    assert rep["results"]["lit_pixels"] == 2


def test_render_deterministic(capsys, cfg, tmp_path):
    c = cfg("block rotation r=0.9 angle=1/4pi\n")
    hashes = []
    for i in range(2):
        out = tmp_path / f"a{i}.pgm"
        code, rep, _ = run(capsys, "render", "--config", c, "--count", "5000", "--seed", "3",
                           "--resolution", "64x64", "--output", str(out))
        assert code == 0
        hashes.append(rep["artifacts"][0]["sha256"])
    assert hashes[0] == hashes[1]
    assert not [p for p in os.listdir(tmp_path) if p.endswith(".tmp")]


def test_render_csv(capsys, cfg, tmp_path):
    out = tmp_path / "cloud.csv"
    code, _, _ = run(capsys, "render", "--config", cfg("block rotation r=1/2 angle=1/2pi\n"),
                     "--depth", "4", "--format", "csv", "--output", str(out))
    assert code == 0
    pts = np.loadtxt(out, delimiter=",")
    assert pts.shape == (16, 2)


def test_interior_and_connectivity(capsys):
    code, rep, _ = run(capsys, "interior", "--lambda", "0.4")
    assert code == 0 and rep["verdicts"]["interior"]["verdict"] == "EmptyNullSet"
    code, rep, _ = run(capsys, "connectivity", "--lambda", "0.4", "--strict")
    assert code == 2 and rep["verdicts"]["connectivity"] == "Unknown"
    code, rep, _ = run(capsys, "connectivity", "--lambda", "1/2", "--strict")
    assert code == 0 and rep["verdicts"]["connectivity"] == "PathConnected"


def test_interior_certify(capsys, cfg):
    code, rep, _ = run(capsys, "interior", "--config", cfg("block rotation r=0.9 angle=1/4pi\n"),
                       "--certify")
    assert code == 0
    cert = rep["verdicts"]["certificate"]
    assert cert["verdict"] == "Certified" and cert["depth"] <= 24


def test_interior_strict_gap(capsys, cfg):
    code, _, _ = run(capsys, "interior", "--config", cfg("row 0 -3/5\nrow 1 0\nu 1 0\n"), "--strict")
    assert code == 2


def test_decompose_and_project(capsys, cfg):
    code, rep, _ = run(capsys, "decompose-check", "--config",
                       cfg("row 1/2 1/3\nrow -1/4 2/3\nu 1 1\n"), "--depth", "6")
    assert code == 0 and rep["verdicts"]["decomposition"]["equal"]
    code, rep, _ = run(capsys, "project", "--config", cfg("row 1/2 0\nrow 0 1/4\nu 1 1\n"),
                       "--address", "+(-)", "--depth", "12")
    assert code == 0
    assert rep["results"]["point_decimal"][0] == pytest.approx(0, abs=1e-3)
    assert Fraction(rep["results"]["radius"]) > 0


def test_enumerate_entropy(capsys):
    code, rep, _ = run(capsys, "enumerate", "--lambda", "11/20", "--lengths", "4:9")
    assert code == 0
    assert rep["results"]["entropy"]["slope"] > 0
    assert [c["N_n"] for c in rep["results"]["counts"]] == [8, 12, 16, 16, 32, 38]


def test_json_output_file(capsys, tmp_path):
    out = tmp_path / "sub" / "report.json"
    code, rep, _ = run(capsys, "constants", "--output", str(out))
    assert code == 0 and rep is None
    assert json.loads(out.read_text())["command"] == "constants"


def test_round_trip(capsys, cfg, tmp_path):
    c = cfg("block rotation r=1/2 angle=1/2pi\n")
    out = tmp_path / "img.pgm"
    code, rep, _ = run(capsys, "render", "--config", c, "--depth", "8", "--output", str(out))
    assert code == 0
    # rebuild the run from the echoed input and the recorded flags
    c2 = cfg(rep["input"], "echo.cfg")
    argv = [c2 if a == c else a for a in rep["argv"]]
    argv = [str(tmp_path / "img2.pgm") if a == str(out) else a for a in argv]
    code, rep2, _ = run(capsys, *argv)
    assert rep2["artifacts"][0]["sha256"] == rep["artifacts"][0]["sha256"]
    assert rep2["results"] == rep["results"]


@pytest.mark.parametrize("name,text,verdict,rule,beta", BATTERY, ids=[b[0] for b in BATTERY])
def test_exit_codes_on_battery(capsys, cfg, name, text, verdict, rule, beta):
    code, rep, _ = run(capsys, "classify", "--config", cfg(text))
    assert code == 0
    assert rep["verdicts"]["uniqueness"]["verdict"] == verdict
    # a second run from the echo gives the same verdicts
    code2, rep2, _ = run(capsys, "classify", "--config", cfg(rep["input"], "echo.cfg"))
    assert code2 == 0 and rep2["verdicts"] == rep["verdicts"]
    strict, _, _ = run(capsys, "classify", "--config", cfg(text), "--strict")
    unknown = "Unknown" in (rep["verdicts"]["interior"]["verdict"], rep["verdicts"]["connectivity"])
    assert strict == (2 if unknown else 0)


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "selfaffine", "constants", "--precision", "1e-6"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0
    assert json.loads(r.stdout)["results"]["precision"] == "1/1000000"
