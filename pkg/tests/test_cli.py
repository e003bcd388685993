import csv
import io
import json
import subprocess
import sys

import pytest

from arithdyn.cli import RunConfig, run


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_height_row_for_preperiodic_point(capsys):
    code, out, _ = call(capsys, "height", "--map", "p1: x^2-29/16", "--point", "1/4")
    assert code == 0
    (r,) = rows(out)
    assert r["point"] == "1/4" and r["height"] == "0" and r["preperiodic"] == "true"
    assert (r["tail"], r["cycle"]) == ("1", "3")


def test_henon_origin_is_periodic(capsys):
    code, out, _ = call(capsys, "height", "--map", "henon: P=y^2, delta=1", "--point", "(0,0)")
    (r,) = rows(out)
    assert code == 0 and r["height"] == "0" and r["preperiodic"] == "true" and r["tail"] == "0"


def test_malformed_point_exits_2_with_position(capsys):
    code, out, err = call(capsys, "height", "--map", "henon: P=y^2, delta=1", "--point", "(1,,2)")
    assert code == 2 and out == ""
    assert "--point" in err and "position 3" in err and "(1,,2)" in err


@pytest.mark.parametrize("argv, field", [
    (["height", "--map", "p1 x^2", "--point", "1"], "--map"),
    (["height", "--map", "p1: x^2", "--point", "1", "--tol", "-1"], "--tol"),
    (["decay", "--map", "p1: x^2", "--m", "0..2"], "--m"),
    (["green", "--map", "p1: x^2", "--point", "3", "--place", "4"], "--place"),
])
def test_parse_errors_name_the_field(capsys, argv, field):
    code, _, err = call(capsys, *argv)
    assert code == 2 and field in err


def test_budget_exhaustion_exits_3(capsys):
    code, _, err = call(capsys, "common-zeros", "--F", "poly2: x^2, y^2", "--m", "7")
    assert code == 3 and "16384" in err
    code, _, _ = call(capsys, "common-zeros", "--F", "poly2: x^2, y^2", "--m", "2", "--budget-bits", "4")
    assert code == 3


def test_freeness_certificate(capsys):
    code, out, _ = call(capsys, "freeness", "--F", "skew: p=x^2; q=y^2", "--G", "skew: p=x^2; q=-y^2",
                        "--max-len", "2")
    (r,) = rows(out)
    assert code == 0 and (r["w1"], r["w2"], r["verified"]) == ("[G,G]", "[G,F]", "true")


def test_ritt_classify(capsys):
    code, out, _ = call(capsys, "ritt", "classify", "--poly", "2x^2-1")
    (r,) = rows(out)
    assert code == 0 and r["detail"] == "Chebyshev-conjugate via l(x)=2*x, sign +"


def test_equidist_row_and_histogram(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("ARITHDYN_OUT_DIR", str(tmp_path))
    code, out, _ = call(capsys, "equidist", "--map", "p1: x^2", "--period", "10", "--law", "circle",
                        "--histogram", "h.csv")
    (r,) = rows(out)
    assert code == 0 and r["points"] == "1024" and float(r["ks"]) < 0.05
    hist = rows((tmp_path / "h.csv").read_text())
    assert len(hist) == 32
    assert abs(sum(float(h["empirical_mass"]) for h in hist) - 1) < 1e-12


def test_common_zeros_exact_output(capsys):
    code, out, _ = call(capsys, "common-zeros", "--F", "poly2: x^2, y^2", "--G", "poly2: y^2, x^2")
    assert code == 0
    got = sorted(r["coords"] for r in rows(out))
    assert got == ["0; 0", "1; 1"]
    code, out, _ = call(capsys, "common-zeros", "--F", "poly2: x^2, y^2", "--G", "poly2: y^2, x^2",
                        "--format", "json")
    doc = json.loads(out)
    assert doc["count"] == 2 and doc["elimination"] == [0, -2, 5, -4, 1]
    assert all(isinstance(c, int) for o in doc["orbits"] for c in o["field"])


def test_exact_values_are_rational_strings(capsys):
    code, out, _ = call(capsys, "height", "--map", "split: x^2; x^2", "--point", "(1/2, -3)")
    (r,) = rows(out)
    assert code == 0 and r["finite_part"] == "1*log(2)"
    code, out, _ = call(capsys, "green", "--map", "p1: x^2", "--point", "3/8", "--place", "2")
    (r,) = rows(out)
    assert r["exponent"] == "3" and r["error_bound"] == "0"


@pytest.mark.parametrize("argv", [
    ["height", "--map", "skew: p=x^2-1; q=y^2+x*y-3/4", "--box", "2"],
    ["decay", "--map", "p1: x^2", "--C", "p1: 2x", "--m", "1..4"],
    ["density-report", "--F", "poly2: x^2, y^2", "--G", "poly2: y^2, x^2", "--m", "1..2", "--n", "1..2"],
    ["equidist", "--map", "p1: x^2-2", "--period", "7", "--law", "arcsine", "--format", "json"],
    ["ritt", "symmetry", "--poly", "x^3+x^2"],
])
def test_output_is_deterministic(capsys, argv):
    first = call(capsys, *argv)
    second = call(capsys, *argv)
    assert first[0] == 0 and first == second


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("command = height\n# comment\nmap = p1: x^2-29/16\npoint = 1/4\npoint = 3\n")
    code, out, _ = call(capsys, "height", "--config", str(cfg))
    assert code == 0 and [r["point"] for r in rows(out)] == ["1/4", "3"]
    code, out, _ = call(capsys, "height", "--config", str(cfg), "--point", "0")
    assert [r["point"] for r in rows(out)] == ["0"]
    cfg.write_text("command = green\nmap = p1: x^2\n")
    code, _, err = call(capsys, "height", "--config", str(cfg))
    assert code == 2 and "--config" in err
    cfg.write_text("mystery = 1\n")
    assert call(capsys, "height", "--config", str(cfg))[0] == 2


def test_run_config_round_trip():
    cfg = RunConfig("common-zeros", {"F": "poly2: x^2, y^2", "G": "poly2: y^2, x^2", "m": "1..2",
                                     "tol": 1e-12, "point": ["1/3", "(1, -2/5)"], "budget_bits": 99})
    assert RunConfig.from_text(cfg.to_text()) == cfg


def test_out_dir_override(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("ARITHDYN_OUT_DIR", str(tmp_path))
    code, out, _ = call(capsys, "preperiodic", "--map", "p1: x^2-1", "--box", "1", "--out", "sub/p.csv")
    assert code == 0 and out == ""
    text = (tmp_path / "sub" / "p.csv").read_text()
    assert text.splitlines()[0] == "point,preperiodic,tail,cycle"


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "arithdyn.cli", "height", "--map", "p1: x^2", "--point", "inf"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and rows(proc.stdout)[0]["preperiodic"] == "true"
