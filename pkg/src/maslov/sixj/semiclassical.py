"""The 6j symbol as a one-dimensional semiclassical problem.

With the four lengths ``J1..J4`` fixed, the shapes of the tetrahedron form a
two-dimensional phase space with canonical pair ``x = J12``,
``p = -phi12``. The observable ``H = J23`` defines the Lagrangian manifold
(a closed orbit), and

    e = {J12, J23} = -V / (J12 J23)

vanishes exactly at the flat tetrahedra, the caustics of this problem.

Asymptotic formula
------------------
For a classically allowed query (``J = j + 1/2`` embeddable),

    {6j} ~ sqrt(2/pi) |e|^(-1/2) cos(S - m pi/4 + (pi - alpha12_c)/2) / (2 sqrt(J12 J23)),

where ``S = sum_edges J_e (pi - alpha_e)`` uses the interior dihedral
angles (the standard Ponzano-Regge assembly) and ``m`` is the local Maslov
index of a flat configuration ``c`` on the query's own J23 orbit, computed
by the generic caustic machinery on a short segment around ``c``. The
anchor prefers ``alpha12_c = pi``, where the last term vanishes. The factor
``2 sqrt(J12 J23) = sqrt((2 j12 + 1)(2 j23 + 1))`` converts the
orthonormal-basis overlap to the symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from ..caustics import (
    CausticEvent,
    CurveOnL,
    DetectionOpts,
    detect_caustics,
)
from ..errors import (
    CausticQueryError,
    ForbiddenRegionError,
    NotACausticError,
    NumericalError,
    UnsupportedError,
)
from ..maslov_form import MaslovIntegral, integrate_maslov_form
from ..symplectic import LagrangianSpec, Observable, PhasePoint
from .geometry import (
    EDGES,
    Tetrahedron,
    _triangle_foot,
    dihedral_cosine,
    flat_tolerance,
    j23_orbit,
    tetrahedron_from_dihedral,
    tetrahedron_from_lengths,
)
from .racah import SixJQuery

#: orbit sampling for the 6j curves; flat configurations are well separated
SIXJ_OPTS = DetectionOpts(samples=256)


@dataclass(frozen=True)
class SixJReduction:
    """The reduced phase space for fixed ``J1..J4``."""

    J1: float
    J2: float
    J3: float
    J4: float

    @classmethod
    def of(cls, tet: Tetrahedron) -> "SixJReduction":
        return cls(*(float(L) for L in tet.lengths))

    def tetrahedron(self, pt: PhasePoint) -> Tetrahedron:
        return tetrahedron_from_dihedral(self.J1, self.J2, self.J3, self.J4,
                                         float(pt.x[0]), -float(pt.p[0]))

    @staticmethod
    def point(tet: Tetrahedron) -> PhasePoint:
        return PhasePoint([tet.J12], [-tet.phi12])

    def j23(self, pt: PhasePoint) -> float:
        J12, phi = float(pt.x[0]), -float(pt.p[0])
        a, rho2 = _triangle_foot(self.J1, self.J2, J12)
        b, r2 = _triangle_foot(self.J4, self.J3, J12)
        sq = (b - a) ** 2 + r2 + rho2 - 2.0 * math.sqrt(max(r2, 0) * max(rho2, 0)) * math.cos(phi)
        return math.sqrt(max(sq, 0.0))

    def dj23_dx(self, pt: PhasePoint) -> float:
        """``dJ23/dJ12`` at fixed ``phi12`` from the explicit embedding."""
        x, phi = float(pt.x[0]), -float(pt.p[0])
        a, rho2 = _triangle_foot(self.J1, self.J2, x)
        b, r2 = _triangle_foot(self.J4, self.J3, x)
        da = 0.5 - (self.J1 ** 2 - self.J2 ** 2) / (2 * x * x)
        db = 0.5 - (self.J4 ** 2 - self.J3 ** 2) / (2 * x * x)
        rho, r = math.sqrt(max(rho2, 0.0)), math.sqrt(max(r2, 0.0))
        # rho rho' = -a a', r r' = -b b'
        cross = (-b * db * rho2 - a * da * r2) / (r * rho)
        d_sq = 2 * (b - a) * (db - da) - 2 * b * db - 2 * a * da - 2 * math.cos(phi) * cross
        return d_sq / (2.0 * self.j23(pt))

    def observable(self, analytic_x: bool = True) -> Observable:
        """``H = J23`` with analytic gradients (``dH/dp = -V/(J12 J23)``).

        ``analytic_x=False`` leaves ``dH/dx`` to central differences.
        """

        def grad_p(pt):
            tet = self.tetrahedron(pt)
            return np.array([-tet.V / (tet.J12 * tet.J23)])

        grad_x = (lambda pt: np.array([self.dj23_dx(pt)])) if analytic_x else None
        return Observable(self.j23, grad_x=grad_x, grad_p=grad_p, name="J23")

    def e_bracket(self, pt: PhasePoint, k: int) -> np.ndarray:
        """``{e, J23} = A14 A23 cos(phi23)/(J12 J23^2) - V^2/(J12^3 J23^2)``."""
        if k != 0:
            raise IndexError("the reduction has a single observable")
        t = self.tetrahedron(pt)
        J12, J23, V = t.J12, t.J23, t.V
        val = (t.area(1, 4) * t.area(2, 3) * math.cos(t.phi23) / (J12 * J23 ** 2)
               - V * V / (J12 ** 3 * J23 ** 2))
        return np.array([[val]])

    def spec(self, J23: float) -> LagrangianSpec:
        return LagrangianSpec([self.observable()], [J23], e_bracket=self.e_bracket,
                              name=f"6j reduction J23={J23:.6g}")


def orbit_curve(tet0: Tetrahedron, t_range: Tuple[float, float] = (0.0, 2 * math.pi)) -> CurveOnL:
    """The J23 orbit through ``tet0`` in the reduced coordinates, by flow time."""
    red = SixJReduction.of(tet0)

    def point_at(t):
        return red.point(j23_orbit(tet0, t))

    return CurveOnL(point_at, t_range, flow_index=0, p_period=2 * math.pi,
                    label="J23 orbit")


def orbit_spec(tet0: Tetrahedron) -> LagrangianSpec:
    return SixJReduction.of(tet0).spec(tet0.J23)


def pole_times(tet0: Tetrahedron, samples: int = 720, rel_tol: float = 1e-6) -> List[float]:
    """Flow times in ``[0, 2 pi)`` where the J23 orbit passes through ``J12 = 0``.

    This happens only when ``J1 = J2`` and ``J3 = J4``. There the chart
    ``(J12, -phi12)`` is singular (``phi12`` is undefined and ``J12``
    bounces off zero with finite speed), so ``e`` changes sign without
    passing through zero. It is not a caustic.
    """
    J1, J2, J3, J4 = (float(L) for L in tet0.lengths)
    scale = max(J1, J2, J3, J4)
    if abs(J1 - J2) > 1e-12 * scale or abs(J3 - J4) > 1e-12 * scale:
        return []
    ts = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
    h = ts[1] - ts[0]
    vals = np.array([j23_orbit(tet0, t).J12 for t in ts])
    out = []
    for k in range(samples):
        if vals[k] <= vals[k - 1] and vals[k] <= vals[(k + 1) % samples]:
            res = minimize_scalar(lambda t: j23_orbit(tet0, t).J12,
                                  bounds=(ts[k] - h, ts[k] + h), method="bounded",
                                  options={"xatol": 1e-13})
            if res.fun <= rel_tol * scale:
                out.append(float(res.x) % (2 * math.pi))
    return sorted(out)


def orbit_segments(tet0: Tetrahedron, margin: float = 1e-7) -> List[CurveOnL]:
    """The full J23 orbit as one closed curve, or as open pieces between poles."""
    poles = pole_times(tet0)
    if not poles:
        return [orbit_curve(tet0)]
    cuts = poles + [poles[0] + 2 * math.pi]
    return [orbit_curve(tet0, (a + margin, b - margin)) for a, b in zip(cuts, cuts[1:])]


@dataclass(frozen=True)
class FlatCrossing:
    """A caustic on a J23 orbit with the geometry at the crossing."""

    event: CausticEvent
    tetrahedron: Tetrahedron
    cos_phi12: float
    alpha12: float

    @property
    def expected_index(self) -> int:
        return int(np.sign(self.cos_phi12))


def orbit_crossings(tet0: Tetrahedron, opts: DetectionOpts = SIXJ_OPTS,
                    t_range: Optional[Tuple[float, float]] = None) -> List[FlatCrossing]:
    """Caustics along the J23 orbit of ``tet0`` found by the generic machinery.

    Without ``t_range`` the whole orbit is scanned, split at pole passages.
    """
    curves = orbit_segments(tet0) if t_range is None else [orbit_curve(tet0, t_range)]
    spec = orbit_spec(tet0)
    out = []
    for curve in curves:
        for ev in detect_caustics(curve, spec, opts):
            tet = j23_orbit(tet0, ev.t_star)
            out.append(FlatCrossing(ev, tet, math.cos(tet.phi12), tet.interior_dihedral("J12")))
    return out


def orbit_maslov_integral(tet0: Tetrahedron, opts: DetectionOpts = SIXJ_OPTS) -> MaslovIntegral:
    """Maslov-form integral over the closed orbit (summed over pole-free pieces)."""
    spec = orbit_spec(tet0)
    if not pole_times(tet0):
        return integrate_maslov_form(orbit_curve(tet0), spec, opts, closed=True)
    parts = [integrate_maslov_form(c, spec, opts, closed=False) for c in orbit_segments(tet0)]
    crossings = tuple(c for part in parts for c in part.crossings)
    flagged = tuple(t for part in parts for t in part.flagged)
    return MaslovIntegral(sum(w for _, w in crossings), crossings, True, flagged)


def sixj_caustic_data(tet: Tetrahedron, flat_rel_tol: float = 1e-9) -> Tuple[float, float]:
    """``(v, u) = (A12 A34 J23 cos phi12, A14 A23 J12 cos phi23)`` at a flat tetrahedron."""
    tol = flat_tolerance(tet, flat_rel_tol)
    if abs(tet.V) > tol:
        raise NotACausticError(f"|V| = {abs(tet.V):.3e} exceeds flat_tol = {tol:.3e}")
    v = tet.area(1, 2) * tet.area(3, 4) * tet.J23 * math.cos(tet.phi12)
    u = tet.area(1, 4) * tet.area(2, 3) * tet.J12 * math.cos(tet.phi23)
    return v, u


def sixj_maslov_index(flat_tet: Tetrahedron, half_width: float = 0.05,
                      flat_rel_tol: float = 1e-6, opts: DetectionOpts = SIXJ_OPTS) -> int:
    """Local index of the flat configuration ``flat_tet`` along its J23 orbit.

    The orbit segment ``t in [-half_width, half_width]`` must contain exactly
    one caustic; its index comes from ``sgn(u Edot v)`` in the reduction.
    """
    tol = flat_tolerance(flat_tet, flat_rel_tol)
    if abs(flat_tet.V) > tol:
        raise NotACausticError(f"|V| = {abs(flat_tet.V):.3e} exceeds {tol:.3e}; not flat")
    crossings = orbit_crossings(flat_tet, opts, (-half_width, half_width))
    if len(crossings) != 1:
        raise NumericalError(f"expected one caustic near the flat point, found {len(crossings)}")
    return crossings[0].event.local_index


def orbit_flat_points(J1: float, J2: float, J3: float, J4: float,
                      J23: float) -> List[Tuple[float, float]]:
    """Flat configurations ``(J12, phi12 in {0, pi})`` on the orbit ``J23 = const``.

    They are the roots of ``cos phi12(J12) = +-1`` for the lengths held
    fixed; the scan grid is refined geometrically towards both ends of the
    admissible ``J12`` interval, where the orbit may turn very close to a
    degenerate face.
    """
    lo = max(abs(J1 - J2), abs(J3 - J4))
    hi = min(J1 + J2, J3 + J4)
    if not hi > lo:
        return []
    w = hi - lo
    ends = w * np.geomspace(1e-13, 1e-2, 60)
    xs = np.unique(np.concatenate([lo + ends, np.linspace(lo, hi, 2001)[1:-1], hi - ends]))
    g = np.array([dihedral_cosine(J1, J2, J3, J4, x, J23) for x in xs])
    out = []
    for target, phi in ((-1.0, math.pi), (1.0, 0.0)):
        d = g - target
        for k in np.flatnonzero(np.isfinite(d[:-1]) & np.isfinite(d[1:])
                                & (np.sign(d[:-1]) * np.sign(d[1:]) < 0)):
            f = lambda x: dihedral_cosine(J1, J2, J3, J4, x, J23) - target
            out.append((float(brentq(f, xs[k], xs[k + 1], xtol=1e-15 * hi)), phi))
    return sorted(out)


@dataclass(frozen=True)
class PhaseAnchor:
    """Flat configuration used to fix the Maslov part of the asymptotic phase."""

    tetrahedron: Tetrahedron
    maslov_index: int
    alpha12: float

    @property
    def phase_offset(self) -> float:
        """``-m pi/4 + (pi - alpha12)/2``.

        The second term is the slope ``theta12 = pi - alpha12`` of the edge
        action at the anchor, which differs from the reduction momentum
        ``p = -phi12`` by a constant carrier when ``alpha12 = 0``.
        """
        return -self.maslov_index * math.pi / 4 + 0.5 * (math.pi - self.alpha12)


def phase_anchor(J1: float, J2: float, J3: float, J4: float, J23: float,
                 opts: DetectionOpts = SIXJ_OPTS) -> PhaseAnchor:
    """Anchor on the orbit ``J23 = const``; ``alpha12 = pi`` configurations are preferred.

    The index is computed by the generic machinery on a short orbit segment
    around the flat configuration (``sixj_maslov_index``).
    """
    flats = orbit_flat_points(J1, J2, J3, J4, J23)
    if not flats:
        raise NumericalError("the orbit has no flat configuration to anchor the phase")
    flats.sort(key=lambda f: -f[1])
    last = None
    for J12c, phi in flats:
        tet = tetrahedron_from_dihedral(J1, J2, J3, J4, J12c, phi)
        if tet.J12 <= 1e-6 * max(J1, J2, J3, J4) or tet.J23 <= 0:
            continue
        width = 0.05 * min(1.0, J12c / max(J1, J2))
        try:
            m = sixj_maslov_index(tet, half_width=width, opts=opts)
        except (NumericalError,) as exc:
            last = exc
            continue
        return PhaseAnchor(tet, m, math.pi if phi > 0 else 0.0)
    raise NumericalError(f"no usable flat configuration to anchor the phase: {last}")


def ponzano_regge_action(tet: Tetrahedron) -> float:
    """``sum_e J_e (pi - alpha_e)`` over the six edges."""
    lengths = tet.edge_lengths()
    return float(sum(lengths[e] * (math.pi - tet.interior_dihedral(e)) for e in EDGES))


@dataclass(frozen=True)
class AsymptoticTerms:
    amplitude: float
    action: float
    maslov_index: int
    e: float
    value: float


def sixj_asymptotic_lengths(J1, J2, J3, J4, J12, J23, flat_rel_tol: float = 1e-9,
                            opts: DetectionOpts = SIXJ_OPTS) -> AsymptoticTerms:
    """Asymptotic formula at real edge lengths (``J = j + 1/2`` for symbols)."""
    tet = tetrahedron_from_lengths(J1, J2, J3, J4, J12, J23, orientation=1)
    tol = flat_tolerance([J1, J2, J3, J4, J12, J23], flat_rel_tol)
    if abs(tet.V) <= tol:
        raise CausticQueryError(
            f"flat tetrahedron (|V| = {abs(tet.V):.3e}): the amplitude diverges at a caustic"
        )
    e = -tet.V / (tet.J12 * tet.J23)
    anchor = phase_anchor(J1, J2, J3, J4, J23, opts)
    S = ponzano_regge_action(tet)
    amp = math.sqrt(2.0 / math.pi) / math.sqrt(abs(e)) / (2.0 * math.sqrt(tet.J12 * tet.J23))
    return AsymptoticTerms(amp, S, anchor.maslov_index, e,
                           amp * math.cos(S + anchor.phase_offset))


def sixj_asymptotic(q: SixJQuery, flat_rel_tol: float = 1e-9,
                    opts: DetectionOpts = SIXJ_OPTS) -> float:
    """Semiclassical value of ``{j1 j2 j12; j3 j4 j23}``.

    Raises ``ForbiddenRegionError`` outside the classically allowed region
    and ``CausticQueryError`` at a flat tetrahedron.
    """
    return sixj_asymptotic_lengths(*q.semiclassical_lengths(), flat_rel_tol=flat_rel_tol,
                                   opts=opts).value


# ---------------------------------------------------------------------------
# phase along the orbit


def _wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


@dataclass(frozen=True)
class BranchPhase:
    """Half the phase difference of the two WKB branches meeting at ``x = J12``."""

    action: float  # int p dx from the query tetrahedron to its mirror image
    maslov_index: int
    theta: float  # (action - m pi/2) / 2
    pr_phase: float  # S + pi/4

    def mismatch(self) -> float:
        """Distance of ``cos(theta) = +-cos(pr_phase)`` from holding, in radians."""
        d = []
        for s in (1, -1):
            x = (self.theta - s * self.pr_phase) % math.pi
            d.append(min(x, math.pi - x))
        return min(d)


def wkb_branch_phase(q_or_lengths, panels: int = 64, order: int = 16,
                     opts: DetectionOpts = SIXJ_OPTS) -> BranchPhase:
    """Phase built from ``int theta`` and the Maslov index along the J23 orbit.

    Runs from the ``V > 0`` tetrahedron to its mirror image (same J12,
    ``V < 0``) through the first caustic. ``p = -phi12`` is unwrapped along
    the way. Up to a sign of the cosine (a basis convention), ``theta``
    reproduces the Ponzano-Regge phase ``S + pi/4``.
    """
    L = (q_or_lengths.semiclassical_lengths() if isinstance(q_or_lengths, SixJQuery)
         else tuple(float(v) for v in q_or_lengths))
    tet0 = tetrahedron_from_lengths(*L, orientation=1)
    if pole_times(tet0):
        raise UnsupportedError("the J23 orbit passes through J12 = 0, where p = -phi12 "
                               "is undefined; the branch phase needs a pole-free orbit")
    curve = orbit_curve(tet0)
    events = detect_caustics(curve, orbit_spec(tet0), opts)
    if not events:
        raise NumericalError("orbit has no caustic")
    first = events[0]
    x0 = tet0.J12
    # mirror point: J12 returns to x0 after the first caustic
    g = lambda t: j23_orbit(tet0, t).J12 - x0
    ts = np.linspace(first.t_star, 2 * math.pi, 513)[1:]
    gs = [g(t) for t in ts]
    k = next(i for i in range(1, len(ts)) if gs[i - 1] * gs[i] <= 0)
    t_end = brentq(g, ts[k - 1], ts[k], xtol=1e-14)

    nodes, weights = np.polynomial.legendre.leggauss(order)
    total = 0.0
    phi_prev = tet0.phi12
    unwrapped = phi_prev
    for lo, hi in ((0.0, first.t_star), (first.t_star, t_end)):
        edges = np.linspace(lo, hi, panels + 1)
        for a, b in zip(edges, edges[1:]):
            ts_ = 0.5 * (a + b) + 0.5 * (b - a) * nodes
            for t, w in zip(ts_, weights):
                tet = j23_orbit(tet0, t)
                unwrapped += _wrap(tet.phi12 - phi_prev)
                phi_prev = tet.phi12
                xdot = -tet.V / (tet.J12 * tet.J23)
                total += 0.5 * (b - a) * w * (-unwrapped) * xdot
    m = first.local_index
    theta = 0.5 * (total - m * math.pi / 2)
    return BranchPhase(total, m, theta, ponzano_regge_action(tet0) + math.pi / 4)


# ---------------------------------------------------------------------------
# sweeps over j23


def allowed_j23(q: SixJQuery) -> List:
    """Admissible ``j23`` values whose tetrahedron is classically allowed and not flat."""
    lo = max(abs(q.j1 - q.j4), abs(q.j2 - q.j3))
    hi = min(q.j1 + q.j4, q.j2 + q.j3)
    out = []
    j = lo
    while j <= hi:
        L = q.with_j23(j).semiclassical_lengths()
        try:
            tet = tetrahedron_from_lengths(*L)
            if abs(tet.V) > flat_tolerance(L):
                out.append(Fraction(j))
        except ForbiddenRegionError:
            pass
        j += 1
    return out


def node_count(values: Sequence[float]) -> int:
    """Number of sign changes in a sequence (exact zeros are skipped)."""
    s = np.sign(np.asarray(values, dtype=float))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def normalized_rms_error(exact: Sequence[float], approx: Sequence[float]) -> float:
    """``sqrt(mean((approx - exact)^2) / mean(exact^2))``."""
    exact = np.asarray(exact, dtype=float)
    approx = np.asarray(approx, dtype=float)
    return float(np.sqrt(np.mean((approx - exact) ** 2) / np.mean(exact ** 2)))


def middle_fraction(values: Sequence, fraction: float = 0.6) -> slice:
    """Slice selecting the central ``fraction`` of a sequence."""
    n = len(values)
    cut = int(round(0.5 * (1.0 - fraction) * n))
    return slice(cut, n - cut)
