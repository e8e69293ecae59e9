from fractions import Fraction

import numpy as np
import pytest
from sympy import Rational
from sympy.physics.wigner import wigner_6j

from maslov.errors import InputError
from maslov.sixj.racah import (
    SixJQuery,
    half_integer,
    orthogonality_sum,
    sixj_exact,
    sixj_exact_squared,
    sixj_recursion,
    sixj_recursion_family,
)


def _sympy(q: SixJQuery) -> float:
    args = [Rational(x.numerator, x.denominator) for x in q.racah_order()]
    return float(wigner_6j(*args))


def test_half_integer_parsing():
    assert half_integer("3/2") == Fraction(3, 2)
    assert half_integer(2.5) == Fraction(5, 2)
    assert half_integer(4) == 4
    for bad in ("-1", "1/3", 0.25, "x"):
        with pytest.raises(InputError):
            half_integer(bad)


def test_trivial_and_small_values():
    assert sixj_exact(SixJQuery.of(0, 0, 0, 0, 0, 0)) == 1.0
    q = SixJQuery.of(1, 1, 1, 1, 1, 1)
    assert sixj_exact(q) == pytest.approx(1 / 6, abs=1e-15)
    assert sixj_exact(q) == pytest.approx(sixj_recursion(q), abs=1e-14)
    half = SixJQuery.of("1/2", "1/2", 1, "1/2", "1/2", 1)
    assert sixj_exact(half) == pytest.approx(_sympy(half), abs=1e-15)


def test_inadmissible_is_exactly_zero():
    assert sixj_exact(SixJQuery.of(1, 1, 3, 1, 1, 1)) == 0.0  # triangle
    assert sixj_exact(SixJQuery.of("1/2", 1, 1, 1, 1, 1)) == 0.0  # parity
    assert sixj_recursion(SixJQuery.of(1, 1, 3, 1, 1, 1)) == 0.0
    assert sixj_exact_squared(SixJQuery.of(1, 1, 3, 1, 1, 1)) == 0


def _random_query(rng, jmax=20):
    while True:
        j = [Fraction(int(rng.integers(0, 2 * jmax + 1)), 2) for _ in range(6)]
        q = SixJQuery(*j)
        if q.admissible:
            return q


def test_matches_sympy_oracle():
    rng = np.random.default_rng(0)
    for _ in range(25):
        q = _random_query(rng, jmax=12)
        assert sixj_exact(q) == pytest.approx(_sympy(q), abs=1e-14)


def test_racah_and_recursion_agree():
    rng = np.random.default_rng(1)
    for _ in range(50):
        q = _random_query(rng)
        assert abs(sixj_exact(q) - sixj_recursion(q)) <= 1e-14


def test_symmetries():
    rng = np.random.default_rng(2)
    for _ in range(10):
        q = _random_query(rng, jmax=10)
        a, b, c, d, e, f = q.racah_order()
        val = sixj_exact(q)
        assert sixj_exact(SixJQuery(b, a, c, e, d, f)) == pytest.approx(val, abs=1e-15)
        assert sixj_exact(SixJQuery(d, e, c, a, b, f)) == pytest.approx(val, abs=1e-15)


def test_large_spins_do_not_overflow():
    q = SixJQuery.of(200, 200, 200, 200, 200, 200)
    v = sixj_exact(q)
    assert np.isfinite(v) and 0 < abs(v) < 1e-2
    assert v == pytest.approx(sixj_recursion(q), abs=1e-14)


def test_recursion_family_is_normalized():
    js, f = sixj_recursion_family(5, 4, 6, 7, 3)
    assert len(js) == len(f)
    weights = np.array([2 * float(j) + 1 for j in js])
    assert np.sum(weights * (2 * 6 + 1) * np.asarray(f) ** 2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("args", [(1, 1, 1, 1, 1), (5, 4, 3, 6, 7), ("7/2", "5/2", 2, 3, 1),
                                  (20, 20, 20, 20, 20), (15, 9, 12, 14, 11)])
def test_orthogonality(args):
    assert orthogonality_sum(*args) == pytest.approx(1.0, abs=1e-12)
