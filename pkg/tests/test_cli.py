import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from pjump.cli import main
from pjump.scenario import REFERENCE_SCENARIO, ScenarioError, parse_scenario

ROOT = Path(__file__).resolve().parents[1]
REF = ROOT / "scenarios" / "reference.toml"
FREE = ROOT / "scenarios" / "unperturbed.toml"


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_shipped_reference_matches_builtin():
    assert REF.read_text() == REFERENCE_SCENARIO
    sc = parse_scenario(REFERENCE_SCENARIO)
    assert (sc.p, sc.a, sc.b) == (3.0, 8.0, 1.0)
    assert sc.hypothesis.passed


def test_ptrig_check(tmp_path):
    assert main(["ptrig-check", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "ptrig_check.csv")
    assert [float(r["p"]) for r in rows] == [2.0, 2.5, 3.0, 4.0]
    assert all(float(r["pi_p_rel_err"]) < 1e-12 for r in rows)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["command"] == "ptrig-check" and man["scenario_sha256"] is None
    assert set(man["files"]) == {"ptrig_check.csv", "sinp.csv"}


def test_aux_check(tmp_path):
    assert main(["aux-check", "--scenario", str(REF), "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "aux_check.csv")
    assert all(float(r["abs_err"]) < 1e-10 for r in rows)
    assert float(_rows(tmp_path / "params.csv")[0]["omega"]) == pytest.approx(4 / 3, rel=1e-15)


def test_simulate_unperturbed_hamiltonian_constant(tmp_path):
    assert main(["simulate", "--scenario", str(FREE), "--out", str(tmp_path)]) == 0
    H = np.array([float(r["H"]) for r in _rows(tmp_path / "orbit.csv")])
    assert len(H) == 20 * 64 + 1
    assert np.ptp(H) / abs(H[0]) < 1e-8


def test_floats_round_trip(tmp_path):
    assert main(["aux-check", "--scenario", str(REF), "--out", str(tmp_path)]) == 0
    text = (tmp_path / "params.csv").read_text().splitlines()[1]
    d = float(text.split(",")[7])
    assert d == 1.5 / (8.0 / (4.0 / 3.0) ** 3)  # 17 significant digits round-trip exactly


def test_missing_scenario_no_output(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["simulate", "--scenario", str(tmp_path / "nope.toml"), "--out", str(out)]) == 2
    assert not out.exists()
    assert "not found" in capsys.readouterr().err


@pytest.mark.parametrize("text,needle", [
    ("[equation]\np = 3.0\na = 8.0\nb = 1.0\nq = 2\n", "[equation].q: unknown key"),
    ("[equation]\np = 3.0\na = 8.0\n", "[equation].b: required key missing"),
    ("[equation]\np = 3.0\na = 8.0\nb = 'x'\n", "[equation].b: expected number"),
    ("[equation]\np = 3.0\na = 8.0\nb = 8.0\n", "a == b"),
    ("[equation\n", "line 1"),
    ("[equation]\np = 3.0\na = 8.0\nb = 1.0\n[forcing]\nharmonics = [{ k = 1 }]\n",
     "harmonics[0].amplitude: required key missing"),
    ("[equation]\np = 3.0\na = 8.0\nb = 1.0\n[bogus]\n", "unknown table [bogus]"),
])
def test_invalid_scenarios(tmp_path, capsys, text, needle):
    path = tmp_path / "s.toml"
    path.write_text(text)
    out = tmp_path / "out"
    assert main(["poincare", "--scenario", str(path), "--out", str(out)]) == 2
    assert needle in capsys.readouterr().err
    assert not out.exists()
    with pytest.raises(ScenarioError):
        parse_scenario(text)


def test_hypothesis_failure_cites_inequality(tmp_path, capsys):
    path = tmp_path / "s.toml"
    path.write_text("[equation]\np = 3.0\na = 8.0\nb = 1.0\n[forcing]\nbeta = 1.0\ngamma = 0.5\n")
    out = tmp_path / "out"
    assert main(["poincare", "--scenario", str(path), "--out", str(out)]) == 2
    err = capsys.readouterr().err
    assert "H1" in err and "gamma" in err
    assert not out.exists()


def test_baseline_rejected_where_forcing_matters(tmp_path):
    assert main(["twist", "--scenario", str(FREE), "--out", str(tmp_path / "o")]) == 2


def test_numeric_failure_exit_code(tmp_path):
    out = tmp_path / "out"
    assert main(["poincare", "--scenario", str(REF), "--out", str(out), "--tol", "1e-30"]) == 3
    assert not out.exists()


def test_bad_flags(tmp_path):
    assert main(["poincare", "--scenario", str(REF), "--out", str(tmp_path / "o"), "--threads", "0"]) == 2
    assert main(["poincare", "--scenario", str(REF), "--out", str(tmp_path / "o"), "--tol", "-1"]) == 2


def test_poincare_and_rotation(tmp_path):
    sc = tmp_path / "s.toml"
    sc.write_text(REFERENCE_SCENARIO + "\n[poincare]\niterates = 50\n[rotation]\niterates = 200\n")
    assert main(["poincare", "--scenario", str(sc), "--out", str(tmp_path / "p")]) == 0
    rows = _rows(tmp_path / "p" / "poincare.csv")
    assert len(rows) == 51 and rows[0]["n"] == "0"
    assert main(["rotation", "--scenario", str(sc), "--out", str(tmp_path / "r")]) == 0
    rot = _rows(tmp_path / "r" / "rotation.csv")[0]
    assert 0 <= float(rot["value"]) < 1 and rot["converged"] == "true"


def test_bounded_deterministic_across_threads(tmp_path):
    sc = tmp_path / "s.toml"
    sc.write_text(REFERENCE_SCENARIO + "\n[bounded]\nn_ics = 3\nhorizon = 200\n")
    assert main(["bounded", "--scenario", str(sc), "--out", str(tmp_path / "a"), "--seed", "5"]) == 0
    assert main(["bounded", "--scenario", str(sc), "--out", str(tmp_path / "b"), "--seed", "5",
                 "--threads", "3"]) == 0
    a = (tmp_path / "a" / "bounded.csv").read_bytes()
    assert a == (tmp_path / "b" / "bounded.csv").read_bytes()
    assert main(["bounded", "--scenario", str(sc), "--out", str(tmp_path / "c"), "--seed", "6"]) == 0
    assert a != (tmp_path / "c" / "bounded.csv").read_bytes()
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["seed"] == 5 and len(man["scenario_sha256"]) == 64


def test_curves(tmp_path):
    sc = tmp_path / "s.toml"
    sc.write_text(REFERENCE_SCENARIO.replace("b = 1.0", "b = 2.0") + "\n[curves]\nn_ics = 2\n")
    assert main(["curves", "--scenario", str(sc), "--out", str(tmp_path / "c")]) == 0
    rows = _rows(tmp_path / "c" / "curves.csv")
    assert [r["verdict"] for r in rows] == ["curve", "curve"]


def test_twist_and_scan(tmp_path):
    sc = tmp_path / "s.toml"
    sc.write_text(REFERENCE_SCENARIO + "\n[twist]\nn_theta = 2\nwindow = 16\n"
                  "[scan]\nquantities = ['F', 'remainder']\norders = [0]\n")
    assert main(["twist", "--scenario", str(sc), "--out", str(tmp_path / "t")]) == 0
    assert _rows(tmp_path / "t" / "twist_summary.csv")[0]["direction"] == "decreasing"
    assert main(["scan", "--scenario", str(sc), "--out", str(tmp_path / "s")]) == 0
    fits = _rows(tmp_path / "s" / "scan_fit.csv")
    assert [f["quantity"] for f in fits] == ["F", "remainder"]
    assert all(f["passed"] == "true" for f in fits)


def test_scan_rejects_unknown_quantity(tmp_path):
    sc = tmp_path / "s.toml"
    sc.write_text(REFERENCE_SCENARIO + "\n[scan]\nquantities = ['nope']\n")
    assert main(["scan", "--scenario", str(sc), "--out", str(tmp_path / "s")]) == 2
    assert not (tmp_path / "s").exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pjump", "ptrig-check", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "ptrig_check.csv").exists()
