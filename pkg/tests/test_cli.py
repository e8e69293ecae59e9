import json
import subprocess
import sys
from pathlib import Path

import pytest

from maslov.cli import EXIT_INPUT, EXIT_OK, EXIT_TOLERANCE, Table, main, render
from maslov.sixj.racah import SixJQuery, sixj_recursion

PROBLEMS = Path(__file__).resolve().parents[1] / "problems"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def json_rows(out, table):
    rows = [json.loads(line) for line in out.splitlines() if line.strip()]
    return [r for r in rows if r.get("table") == table]


def test_render_formats():
    t = Table("demo", ["a", "b"], [[1, 0.1 + 0.2], [None, 1 / 3]])
    text = render([t], "text")
    assert text.startswith("# demo") and "0.3" in text
    csv = render([t], "csv").splitlines()
    assert csv[1] == "a,b" and csv[2] == "1,0.3"
    assert csv[3].endswith("0.333333333333333")
    rows = [json.loads(x) for x in render([t], "json-lines").splitlines()]
    assert rows[0]["a"] == 1 and rows[1]["a"] is None


def test_bohr_sommerfeld_harmonic(capsys):
    code, out, _ = run(capsys, "bohr-sommerfeld", PROBLEMS / "harmonic.txt", "--format", "json-lines")
    assert code == EXIT_OK
    rows = json_rows(out, "levels")
    assert len(rows) == 6 and all(r["maslov_total"] == 2 for r in rows)
    assert [r["energy"] for r in rows] == pytest.approx([n + 0.5 for n in range(6)], rel=1e-10)


def test_bohr_sommerfeld_bad_mass(capsys):
    code, out, err = run(capsys, "bohr-sommerfeld", PROBLEMS / "bad_mass.txt")
    assert code == EXIT_INPUT and out == "" and "mass" in err


def test_bohr_sommerfeld_oracle_breach(capsys, tmp_path):
    p = tmp_path / "q.txt"
    p.write_text("kind = oneD\npotential = quartic\nx_min = -5\nx_max = 5\nn_max = 3\n"
                 "tol.oracle_rel = 1e-6\n")
    code, out, err = run(capsys, "bohr-sommerfeld", p, "--oracle", "--format", "json-lines")
    assert code == EXIT_TOLERANCE and "tolerance" in err
    assert all(r["rel_error"] is not None for r in json_rows(out, "levels"))


def test_maslov_curve_examples(capsys):
    code, out, _ = run(capsys, "maslov-curve", PROBLEMS / "harmonic_loop.txt", "--format", "json-lines")
    assert code == EXIT_OK
    assert len(json_rows(out, "events")) == 2
    assert json_rows(out, "total")[0]["mu_integral"] == 2
    code, out, _ = run(capsys, "maslov-curve", PROBLEMS / "caustic_free.txt", "--format", "json-lines")
    assert code == EXIT_OK and json_rows(out, "events") == []
    assert json_rows(out, "total")[0]["mu_integral"] == 0


def test_maslov_curve_sixj_orbit(capsys):
    code, out, _ = run(capsys, "maslov-curve", PROBLEMS / "sixj_orbit.txt", "--format", "json-lines")
    assert code == EXIT_OK
    events = json_rows(out, "events")
    assert events and all(e["local_index"] == e["sgn_cos_phi12"] for e in events)


def test_sixj_exact_and_inadmissible(capsys):
    code, out, _ = run(capsys, "sixj", 3, 3, 3, 3, 3, 3, "--format", "json-lines")
    assert code == EXIT_OK
    value = [json.loads(x) for x in out.splitlines()][0]["exact"]
    assert value == pytest.approx(sixj_recursion(SixJQuery.of(3, 3, 3, 3, 3, 3)), abs=1e-14)
    code, out, err = run(capsys, "sixj", "1/2", 1, 1, 1, 1, 1, "--format", "json-lines")
    assert code == EXIT_OK and json.loads(out.splitlines()[0])["exact"] == 0 and err


def test_sixj_forbidden_asymptotic_exits_2(capsys):
    code, _, err = run(capsys, "sixj", 10, 10, 20, 10, 10, 20, "--asymptotic")
    assert code == EXIT_TOLERANCE and err


def test_sixj_compare_sweep_summary(capsys):
    code, out, _ = run(capsys, "sixj", 20, 20, 20, 20, 20, 20, "--compare", "--sweep",
                       "--format", "json-lines")
    assert code == EXIT_OK
    summary = json_rows(out, "summary")[0]
    assert summary["rms_rel_error_middle60"] < 0.05
    assert abs(summary["nodes_exact"] - summary["nodes_asymptotic"]) <= 1


def test_bad_arguments_exit_1(capsys):
    assert run(capsys, "sixj", 1, 1, 1)[0] == EXIT_INPUT
    assert run(capsys, "sixj", 1, 1, 1, 1, 1, -1)[0] == EXIT_INPUT
    assert run(capsys, "nonsense")[0] == EXIT_INPUT
    assert run(capsys, "maslov-curve", PROBLEMS / "harmonic.txt")[0] == EXIT_INPUT
    assert run(capsys, "bohr-sommerfeld", PROBLEMS / "harmonic.txt", "--tol", "bogus=1")[0] == EXIT_INPUT


def test_canonical_check(capsys, tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("kind = canonical-check\ntrials = 10\nopen_trials = 4\nseed = 3\n")
    code, out, _ = run(capsys, "canonical-check", p, "--format", "json-lines")
    assert code == EXIT_OK
    s = json_rows(out, "summary")[0]
    assert (s["closed_pass"], s["closed_fail"], s["open_pass"], s["open_fail"]) == (10, 0, 4, 0)
    code, out, _ = run(capsys, "canonical-check", p, "--trials", "0", "--format", "json-lines")
    assert code == EXIT_OK and json_rows(out, "trials") == []


def test_output_is_deterministic(capsys, tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("kind = canonical-check\ntrials = 5\nopen_trials = 3\n")
    first = run(capsys, "canonical-check", p, "--seed", "9", "--format", "csv")
    second = run(capsys, "canonical-check", p, "--seed", "9", "--format", "csv")
    assert first == second
    third = run(capsys, "canonical-check", p, "--seed", "10", "--format", "csv")
    assert third[1] != first[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "maslov", "sixj", "1", "1", "1", "1", "1", "1",
                           "--format", "csv"], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert "0.166666666666667" in proc.stdout
