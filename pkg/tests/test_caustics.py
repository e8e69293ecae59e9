import math
import warnings
from dataclasses import replace

import numpy as np
import pytest

from maslov.caustics import (
    CurveOnL,
    DetectionOpts,
    EvenOrderTouchWarning,
    coincident_caustic_checks,
    cokernel_from_differentials,
    detect_caustics,
    e_dot,
    kernel_vector,
    local_maslov_index,
    perturb_path,
    signature_jump_oracle,
    validate_curve,
)
from maslov.errors import (
    CoincidentCheckError,
    EndpointCausticError,
    NonGenericCausticError,
    NotACausticError,
)
from maslov.maslov_form import integrate_maslov_form
from maslov.sixj.geometry import random_tetrahedron
from maslov.sixj.semiclassical import (
    SixJReduction,
    orbit_crossings,
    orbit_curve,
    orbit_spec,
    sixj_caustic_data,
)
from maslov.symplectic import LagrangianSpec, Observable, PhasePoint, jacobians_at
from maslov.systems import (
    harmonic_orbit,
    harmonic_spec,
    kinetic_potential_spec,
    oscillator_pair_spec,
    phase_locked_curve,
    quartic_potential,
    torus_curve,
)


def test_harmonic_orbit_has_two_turning_points():
    spec = harmonic_spec(0.5)
    events = detect_caustics(harmonic_orbit(0.5), spec)
    assert len(events) == 2
    xs = sorted(harmonic_orbit(0.5).point_at(ev.t_star).x[0] for ev in events)
    assert xs == pytest.approx([-1.0, 1.0], abs=1e-9)
    for ev in events:
        assert harmonic_orbit(0.5).point_at(ev.t_star).p[0] == pytest.approx(0.0, abs=1e-9)
        assert ev.local_index == 1


def test_quartic_turning_points_located_to_t_tol():
    pot = quartic_potential()
    spec = kinetic_potential_spec(1.0, pot, 1.0)
    # x = cos t with p = -sqrt(2) sin t sqrt(1 + cos^2 t) satisfies p^2/2 + x^4 = 1
    # identically and avoids the cancellation in sqrt(2(E - V)) near x = +-1,
    # so the turning points sit at t = 0 and t = pi to machine precision
    curve = CurveOnL(lambda t: PhasePoint([math.cos(t)], [-math.sqrt(2.0) * math.sin(t)
                                                          * math.sqrt(1 + math.cos(t) ** 2)]),
                     (-0.5 * math.pi, 1.5 * math.pi))
    events = detect_caustics(curve, spec)
    assert [ev.t_star for ev in events] == pytest.approx([0.0, math.pi], abs=1e-10 * 2 * math.pi)
    assert [ev.local_index for ev in events] == [1, 1]


def test_sixj_events_are_flat_tetrahedra():
    rng = np.random.default_rng(4)
    tet = random_tetrahedron(rng, scale=2.0)
    for c in orbit_crossings(tet):
        assert abs(c.tetrahedron.V) < 1e-8 * max(c.tetrahedron.edge_lengths().values()) ** 3


def test_kernel_vector_examples():
    v, k = kernel_vector([[0.0, 0.0], [0.0, 1.0]])
    assert k == 1 and np.abs(v) == pytest.approx([1.0, 0.0])
    v, k = kernel_vector([[0.0]])
    assert k == 1 and abs(v[0]) == 1.0
    v, k = kernel_vector([[1e-15, 0.0], [0.0, 2.0]], kernel_tol=1e-12)
    assert k == 1 and np.abs(v) == pytest.approx([1.0, 0.0])
    _, k = kernel_vector(np.eye(2))
    assert k == 0


def test_cokernel_examples():
    pot = quartic_potential()
    x = 1.0
    dH = np.array([[pot.dV(x), 0.0]])
    assert cokernel_from_differentials([1.0], dH)[0] == pytest.approx(-pot.dV(x))
    assert cokernel_from_differentials([1.0], np.array([[-1.0, 0.0]]))[0] == 1.0
    with pytest.raises(NotACausticError):
        cokernel_from_differentials([1.0], np.array([[1.0, 0.5]]))


def test_sixj_cokernel_relation():
    rng = np.random.default_rng(2)
    tet = random_tetrahedron(rng, scale=3.0)
    for c in orbit_crossings(tet):
        ft = c.tetrahedron
        red = SixJReduction.of(ft)
        jac = jacobians_at(red.spec(ft.J23), red.point(ft))
        v, u = sixj_caustic_data(ft)
        # u = f v with f = -dJ23/dJ12 at the flat configuration
        assert u / v == pytest.approx(jac.F[0, 0], rel=1e-7)


def test_e_dot_examples():
    M = 1.5
    pot = quartic_potential(0.7)
    spec = kinetic_potential_spec(M, pot, 2.0)
    pt = PhasePoint([0.9], [0.4])
    assert e_dot(spec, pt, 0)[0, 0] == pytest.approx(-pot.dV(0.9) / M)
    assert e_dot(spec, pt, 0, method="fd")[0, 0] == pytest.approx(-pot.dV(0.9) / M, rel=1e-7)
    free = LagrangianSpec([Observable(lambda pt: pt.p[0], name="p")], [1.0])
    assert e_dot(free, PhasePoint([0.0], [1.0]), 0)[0, 0] == pytest.approx(0.0, abs=1e-8)


def test_sixj_e_dot_matches_closed_form_at_flat():
    rng = np.random.default_rng(2)
    tet = random_tetrahedron(rng, scale=3.0)
    for c in orbit_crossings(tet):
        ft = c.tetrahedron
        red = SixJReduction.of(ft)
        got = e_dot(red.spec(ft.J23), red.point(ft), 0)[0, 0]
        want = ft.area(1, 4) * ft.area(2, 3) * math.cos(ft.phi23) / (ft.J12 * ft.J23 ** 2)
        assert got == pytest.approx(want, rel=1e-7)
        # the analytic bracket agrees with differencing E along the flow
        fd = e_dot(LagrangianSpec(red.spec(ft.J23).observables, [ft.J23]), red.point(ft), 0,
                   method="fd")[0, 0]
        assert fd == pytest.approx(want, rel=1e-5)


def test_index_invariant_under_kernel_sign():
    spec = harmonic_spec(0.5)
    curve = harmonic_orbit(0.5)
    for ev in detect_caustics(curve, spec):
        Ed = e_dot(spec, curve.point_at(ev.t_star), 0)
        assert local_maslov_index(ev, Ed) == local_maslov_index(ev.flipped(), Ed)


def test_time_reversal_negates_and_reorders():
    spec = oscillator_pair_spec(1.0, 1.5)
    curve = torus_curve(1.0, 1.5, lambda t: (0.3 + t, 0.7 + 2 * t))
    fwd = detect_caustics(curve, spec)
    bwd = detect_caustics(curve.reversed(), spec)
    assert [e.t_star for e in bwd] == [e.t_star for e in reversed(fwd)]
    assert [e.local_index for e in bwd] == [-e.local_index for e in reversed(fwd)]


def test_scaling_observables_keeps_indices():
    a1, a2 = 1.0, 1.5
    spec = oscillator_pair_spec(a1, a2)
    c1, c2 = 2.5, 0.4
    H1, H2 = spec.observables
    scaled = LagrangianSpec(
        [Observable(lambda pt: c1 * H1(pt), lambda pt: c1 * H1.grad_x(pt),
                    lambda pt: c1 * H1.grad_p(pt)),
         Observable(lambda pt: c2 * H2(pt), lambda pt: c2 * H2.grad_x(pt),
                    lambda pt: c2 * H2.grad_p(pt))],
        [c1 * spec.levels[0], c2 * spec.levels[1]],
    )
    curve = torus_curve(a1, a2, lambda t: (0.3 + t, 0.7 - t))
    a = [e.local_index for e in detect_caustics(curve, spec)]
    b = [e.local_index for e in detect_caustics(curve, scaled)]
    assert a == b and len(a) == 4


def test_u_from_differentials_matches_fv():
    spec = oscillator_pair_spec(1.0, 1.5)
    for curve in (torus_curve(1.0, 1.5, lambda t: (0.3 + t, 0.7 + 3 * t)),
                  phase_locked_curve(1.0, 1.5)):
        for ev in detect_caustics(curve, spec):
            assert ev.u_residual < 1e-8
            assert np.linalg.norm(ev.u) > 0.1


def test_oracle_examples():
    spec = harmonic_spec(0.5)
    curve = harmonic_orbit(0.5)
    for ev in detect_caustics(curve, spec):
        assert signature_jump_oracle(curve, spec, ev) == 1
    # x = A cos t passes x = 0 at t = pi/2: F = -V'(0) = 0 while E = p != 0
    p_event = replace(detect_caustics(curve, spec)[0], t_star=0.5 * math.pi)
    assert jacobians_at(spec, curve.point_at(p_event.t_star)).F[0, 0] == pytest.approx(0.0, abs=1e-15)
    assert signature_jump_oracle(curve, spec, p_event) == 0


def test_oracle_on_sixj_flat_configurations():
    rng = np.random.default_rng(9)
    tet = random_tetrahedron(rng, scale=2.0)
    curve, spec = orbit_curve(tet), orbit_spec(tet)
    for c in orbit_crossings(tet):
        assert signature_jump_oracle(curve, spec, c.event) == c.expected_index


def test_coincident_checks():
    rep = coincident_caustic_checks([[0.0]], [[-2.0]])
    assert rep.passed and rep.dim_ker_E == 1 and rep.dim_ker_F == 0
    spec = oscillator_pair_spec(1.0, 1.5)
    curve = phase_locked_curve(1.0, 1.5)
    events = detect_caustics(curve, spec)
    assert events and all(ev.coincident for ev in events)
    for ev in events:
        jac = jacobians_at(spec, curve.point_at(ev.t_star))
        rep = coincident_caustic_checks(jac.E, jac.F, tol=1e-6)
        assert rep.passed and rep.dim_ker_F == 1
        assert np.linalg.norm(jac.F @ ev.v) > 0.5
    with pytest.raises(CoincidentCheckError):
        coincident_caustic_checks(np.zeros((2, 2)), np.zeros((2, 2)))


def test_endpoint_on_caustic_is_rejected():
    spec = harmonic_spec(0.5)
    curve = CurveOnL(harmonic_orbit(0.5).point_at, (0.0, 2.0), flow_index=0)
    with pytest.raises(EndpointCausticError):
        detect_caustics(curve, spec)


def test_double_kernel_rejected_and_perturbation_helper():
    # at eps = 0 both momenta vanish at t = 0 and det E ~ t^3 changes sign
    spec = oscillator_pair_spec(1.0, 1.5)
    family = lambda eps: torus_curve(1.0, 1.5, lambda t: (t, t * t - eps), (-1.0, 0.9))
    with pytest.raises(NonGenericCausticError):
        detect_caustics(family(0.0), spec)
    eps, events = perturb_path(family, spec, [0.0, 0.05])
    assert eps == 0.05 and [e.kernel_dim for e in events] == [1, 1, 1]
    assert sum(e.local_index for e in events) == integrate_maslov_form(family(eps), spec).value


def test_even_order_touch_warns_without_event():
    spec = oscillator_pair_spec(1.0, 1.5)
    curve = torus_curve(1.0, 1.5, lambda t: (t * t, 0.7), (-0.5, 0.6))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        events = detect_caustics(curve, spec)
    assert events == []
    assert any(issubclass(w.category, EvenOrderTouchWarning) for w in caught)


def test_orbit_tangent_matches_flow():
    validate_curve(harmonic_orbit(0.7, omega=1.3), harmonic_spec(0.7, omega=1.3))
    rng = np.random.default_rng(12)
    tet = random_tetrahedron(rng)
    validate_curve(orbit_curve(tet), orbit_spec(tet))


def test_close_pair_from_different_factors_is_found():
    # p1 = 0 at t = 0.005 and t = 0.025, p2 = 0 at t = 0.007. On a grid of
    # spacing 1/64 the first two share a cell next to the third, so det E
    # shows neither a sign change nor a local minimum there
    spec = oscillator_pair_spec(1.0, 1.5)
    curve = torus_curve(1.0, 1.5, lambda t: (30 * (t - 0.005) * (t - 0.025), t - 0.007),
                        (-0.5, 0.5))
    opts = DetectionOpts(samples=64)
    events = detect_caustics(curve, spec, opts)
    near = [e.t_star for e in events if 0 < e.t_star < 0.03]
    assert near == pytest.approx([0.005, 0.007, 0.025], abs=1e-9)
    assert sum(e.local_index for e in events) == integrate_maslov_form(curve, spec, opts).value
