"""Exact Wigner 6j symbols and an independent recursion.

``sixj_exact`` evaluates the Racah single-sum formula with Python integers
(arbitrary precision) and converts to floating point once, at the end.
``sixj_recursion_family`` produces a whole column of symbols from the
three-term recursion of Schulten and Gordon, normalized by orthogonality;
it shares no arithmetic with the Racah path and serves as its dual check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Tuple, Union

import numpy as np

from ..errors import InputError

HalfInt = Union[int, float, str, Fraction]


def half_integer(value: HalfInt) -> Fraction:
    """Parse ``3``, ``1.5``, ``"3/2"`` into an exact nonnegative half-integer."""
    if isinstance(value, str):
        value = value.strip()
    try:
        f = Fraction(value)
    except (ValueError, TypeError) as exc:
        raise InputError(f"not a number: {value!r}") from exc
    if f < 0 or (2 * f).denominator != 1:
        raise InputError(f"{value!r} is not a nonnegative half-integer")
    return f


def triad_ok(a: Fraction, b: Fraction, c: Fraction) -> bool:
    return abs(a - b) <= c <= a + b and (a + b + c).denominator == 1


@dataclass(frozen=True)
class SixJQuery:
    """The symbol ``{j1 j2 j12; j3 j4 j23}``."""

    j1: Fraction
    j2: Fraction
    j12: Fraction
    j3: Fraction
    j4: Fraction
    j23: Fraction

    def __post_init__(self):
        for name in ("j1", "j2", "j12", "j3", "j4", "j23"):
            object.__setattr__(self, name, half_integer(getattr(self, name)))

    @classmethod
    def of(cls, j1, j2, j12, j3, j4, j23) -> "SixJQuery":
        return cls(j1, j2, j12, j3, j4, j23)

    @property
    def triads(self) -> Tuple[Tuple[Fraction, Fraction, Fraction], ...]:
        return ((self.j1, self.j2, self.j12), (self.j3, self.j4, self.j12),
                (self.j1, self.j4, self.j23), (self.j2, self.j3, self.j23))

    @property
    def admissible(self) -> bool:
        return all(triad_ok(*t) for t in self.triads)

    def racah_order(self) -> Tuple[Fraction, ...]:
        """Entries as ``{a b c; d e f}`` in reading order."""
        return (self.j1, self.j2, self.j12, self.j3, self.j4, self.j23)

    def with_j23(self, j23: HalfInt) -> "SixJQuery":
        return SixJQuery(self.j1, self.j2, self.j12, self.j3, self.j4, j23)

    def semiclassical_lengths(self) -> Tuple[float, ...]:
        """``J = j + 1/2`` in the order ``(J1, J2, J3, J4, J12, J23)``."""
        return tuple(float(j) + 0.5 for j in (self.j1, self.j2, self.j3, self.j4,
                                              self.j12, self.j23))

    def __str__(self):
        f = lambda x: str(x)
        return (f"{{{f(self.j1)} {f(self.j2)} {f(self.j12)}; "
                f"{f(self.j3)} {f(self.j4)} {f(self.j23)}}}")


@lru_cache(maxsize=None)
def _factorials(n: int) -> Tuple[int, ...]:
    out = [1] * (n + 1)
    for k in range(1, n + 1):
        out[k] = out[k - 1] * k
    return tuple(out)


def _fact_table(n: int) -> Tuple[int, ...]:
    # round the cache key up so sweeps share one table
    size = 64
    while size < n:
        size *= 2
    return _factorials(size)


def _racah_exact(a, b, c, d, e, f) -> Tuple[int, int, int]:
    """Return ``(sign, num, den)`` with ``{6j}^2 = num / den`` exactly."""
    # all arguments are doubled integers
    triads = ((a, b, c), (a, e, f), (d, b, f), (d, e, c))
    alphas = [sum(t) // 2 for t in triads]
    betas = [(a + b + d + e) // 2, (b + c + e + f) // 2, (c + a + f + d) // 2]
    tmin, tmax = max(alphas), min(betas)
    fact = _fact_table(tmax + 2)

    pref_num, pref_den = 1, 1
    for x, y, z in triads:
        pref_num *= fact[(x + y - z) // 2] * fact[(x - y + z) // 2] * fact[(-x + y + z) // 2]
        pref_den *= fact[(x + y + z) // 2 + 1]

    # common denominator D = prod_a (tmax - alpha)! prod_b (beta - tmin)!
    D = 1
    for al in alphas:
        D *= fact[tmax - al]
    for be in betas:
        D *= fact[be - tmin]
    N = 0
    for t in range(tmin, tmax + 1):
        den = 1
        for al in alphas:
            den *= fact[t - al]
        for be in betas:
            den *= fact[be - t]
        term = fact[t + 1] * (D // den)
        N += -term if t % 2 else term
    if N == 0:
        return 0, 0, 1
    return (1 if N > 0 else -1), pref_num * N * N, pref_den * D * D


def sixj_exact(q: SixJQuery) -> float:
    """Exact ``{j1 j2 j12; j3 j4 j23}``; 0 for inadmissible triads.

    The square of the symbol is an exact rational; its square root is taken
    after a single correctly rounded integer division.
    """
    if not q.admissible:
        return 0.0
    args = [int(2 * x) for x in q.racah_order()]
    sign, num, den = _racah_exact(*args)
    if sign == 0:
        return 0.0
    return sign * math.sqrt(num / den)


def sixj_exact_squared(q: SixJQuery) -> Fraction:
    """The exact rational ``{6j}^2`` (0 for inadmissible queries)."""
    if not q.admissible:
        return Fraction(0)
    sign, num, den = _racah_exact(*[int(2 * x) for x in q.racah_order()])
    return Fraction(num, den) if sign else Fraction(0)


# ---------------------------------------------------------------------------
# recursion path


def _sg_coefficients(j2, j3, l1, l2, l3):
    def E(j):
        v = ((j * j - (j2 - j3) ** 2) * ((j2 + j3 + 1) ** 2 - j * j)
             * (j * j - (l2 - l3) ** 2) * ((l2 + l3 + 1) ** 2 - j * j))
        return math.sqrt(max(v, 0.0))

    def F(j):
        jj = j * (j + 1)
        a2, a3 = j2 * (j2 + 1), j3 * (j3 + 1)
        b1, b2, b3 = l1 * (l1 + 1), l2 * (l2 + 1), l3 * (l3 + 1)
        return (2 * j + 1) * (jj * (-jj + a2 + a3) + b2 * (jj + a2 - a3)
                              + b3 * (jj - a2 + a3) - 2 * jj * b1)

    return E, F


def sixj_recursion_family(j2: HalfInt, j3: HalfInt, l1: HalfInt, l2: HalfInt,
                          l3: HalfInt) -> Tuple[List[Fraction], np.ndarray]:
    """All ``{j1 j2 j3; l1 l2 l3}`` over the admissible ``j1``, by recursion.

    The three-term recursion

        j1 E(j1+1) f(j1+1) + F(j1) f(j1) + (j1+1) E(j1) f(j1-1) = 0

    is run forward from the lower end and backward from the upper end and
    the two solutions are matched in the middle, which keeps both runs in
    their stable direction. The result is scaled so that
    ``sum (2 j1 + 1)(2 l1 + 1) f^2 = 1`` with the sign of the last entry
    equal to ``(-1)^(j2 + j3 + l2 + l3)``.
    """
    j2, j3, l1, l2, l3 = (half_integer(x) for x in (j2, j3, l1, l2, l3))
    lo = max(abs(j2 - j3), abs(l2 - l3))
    hi = min(j2 + j3, l2 + l3)
    if not (triad_ok(j2, l3, l1) and triad_ok(l2, j3, l1)) or hi < lo:
        return [], np.zeros(0)
    if (j2 + j3 - lo).denominator != 1 or (l2 + l3 - lo).denominator != 1:
        return [], np.zeros(0)
    js = [lo + k for k in range(int(hi - lo) + 1)]
    n = len(js)
    fj2, fj3, fl1, fl2, fl3 = (float(x) for x in (j2, j3, l1, l2, l3))
    E, F = _sg_coefficients(fj2, fj3, fl1, fl2, fl3)
    x = [float(j) for j in js]

    f = np.zeros(n)
    if n == 1:
        f[0] = 1.0
    else:
        bw = np.zeros(n)
        bw[-1] = 1.0
        for k in range(n - 1, 0, -1):
            j = x[k]
            nxt = bw[k + 1] if k + 1 < n else 0.0
            bw[k - 1] = -(j * E(j + 1) * nxt + F(j) * bw[k]) / ((j + 1) * E(j))
            if abs(bw[k - 1]) > 1e100:
                bw /= 1e100
        if x[0] == 0.0:
            f = bw
        else:
            fw = np.zeros(n)
            fw[0] = 1.0
            for k in range(n - 1):
                j = x[k]
                prev = fw[k - 1] if k > 0 else 0.0
                fw[k + 1] = -(F(j) * fw[k] + (j + 1) * E(j) * prev) / (j * E(j + 1))
                if abs(fw[k + 1]) > 1e100:
                    fw /= 1e100
            # match on a window around the largest backward value in the middle third
            a, b = n // 3, max(n // 3 + 1, (2 * n) // 3 + 1)
            mid = a + int(np.argmax(np.abs(bw[a:b]) * np.abs(fw[a:b]) /
                                    (np.abs(bw[a:b]) + np.abs(fw[a:b]) + 1e-300)))
            w = slice(max(mid - 1, 0), min(mid + 2, n))
            scale = float(fw[w] @ bw[w]) / float(fw[w] @ fw[w])
            f = np.concatenate([scale * fw[:mid], bw[mid:]])
    norm = math.sqrt(float(np.sum((2 * np.array(x) + 1) * (2 * float(l1) + 1) * f * f)))
    f = f / norm
    target = -1 if int(j2 + j3 + l2 + l3) % 2 else 1
    if np.sign(f[-1]) != target:
        f = -f
    return js, f


def sixj_recursion(q: SixJQuery) -> float:
    """``{j1 j2 j12; j3 j4 j23}`` through the recursion in ``j23``.

    Uses the symmetry ``{a b c; d e f} = {f d b; c a e}`` to put ``j23``
    in the recursion slot.
    """
    if not q.admissible:
        return 0.0
    js, f = sixj_recursion_family(q.j3, q.j2, q.j12, q.j1, q.j4)
    return float(f[js.index(q.j23)])


def orthogonality_sum(j1: HalfInt, j2: HalfInt, j12: HalfInt, j3: HalfInt,
                      j4: HalfInt) -> float:
    """``sum_j23 (2 j12 + 1)(2 j23 + 1) {j1 j2 j12; j3 j4 j23}^2`` from exact values."""
    base = SixJQuery(j1, j2, j12, j3, j4, 0)
    lo = max(abs(base.j1 - base.j4), abs(base.j2 - base.j3))
    hi = min(base.j1 + base.j4, base.j2 + base.j3)
    total = Fraction(0)
    j23 = lo
    while j23 <= hi:
        q = base.with_j23(j23)
        total += (2 * q.j12 + 1) * (2 * j23 + 1) * sixj_exact_squared(q)
        j23 += 1
    return float(total)
