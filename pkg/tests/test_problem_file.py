import pytest

from maslov.errors import ProblemFileError
from maslov.problem_file import DEFAULT_TOLERANCES, load_problem_file, parse_problem_text


def test_defaults_and_comments():
    pf = parse_problem_text("""
        # unit oscillator
        kind = oneD
        potential = harmonic   # trailing comment
        n_max = 3
        seed = 11
    """)
    assert pf.kind == "oneD" and pf.seed == 11
    assert pf.get("n_max") == 3 and pf.get("mass") == 1.0
    assert pf.tol("rtol") == DEFAULT_TOLERANCES["rtol"]


def test_tolerance_overrides():
    pf = parse_problem_text("kind = oneD\ntol.oracle_rel = 0.05\n")
    assert pf.tol("oracle_rel") == 0.05
    pf2 = pf.with_overrides({"rtol": 1e-10}, seed=3)
    assert pf2.tol("rtol") == 1e-10 and pf2.tol("oracle_rel") == 0.05 and pf2.seed == 3
    with pytest.raises(ProblemFileError):
        pf.with_overrides({"flat_rel": 1e-3})


@pytest.mark.parametrize("text,fragment", [
    ("potential = harmonic", "missing 'kind'"),
    ("kind = twoD", "unknown kind"),
    ("kind = oneD\nmass = 1\nmass = 2", ":3: duplicate key"),
    ("kind = oneD\nmas = 1", ":2: unknown key"),
    ("kind = oneD\nmass = heavy", ":2: mass"),
    ("kind = oneD\nmass = nan", ":2: mass"),
    ("kind = oneD\njust text", ":2: expected"),
    ("kind = oneD\nseed = 1.5", ":2: seed"),
    ("kind = oneD\ntol.flat_rel = 1e-3", ":2: unknown tolerance"),
    ("kind = oneD\ntol.rtol = -1", ":2: tol.rtol must be positive"),
    ("kind = sixj\nmode = fuzzy", ":2: mode"),
])
def test_strict_rejections(text, fragment):
    with pytest.raises(ProblemFileError) as info:
        parse_problem_text(text, "f.txt")
    assert fragment in str(info.value)


def test_require_reports_missing_keys():
    pf = parse_problem_text("kind = curve\nsystem = sixj-orbit\nj1 = 3")
    with pytest.raises(ProblemFileError) as info:
        pf.require("j1", "j2", "j23")
    assert "j2, j23" in str(info.value)


def test_load_from_disk(tmp_path):
    p = tmp_path / "p.txt"
    p.write_text("kind = sixj\nj1 = 1\nj2 = 1\nj12 = 1\nj3 = 1\nj4 = 1\nj23 = 1\nsweep = yes\n")
    pf = load_problem_file(p)
    assert pf.get("sweep") is True and pf.source == str(p)
    with pytest.raises(ProblemFileError):
        load_problem_file(tmp_path / "missing.txt")
