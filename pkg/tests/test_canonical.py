import math

import numpy as np
import pytest

from maslov.canonical import (
    KGenerator,
    LinearCanonical,
    k_generator,
    random_symplectic,
    symplectic_unit,
    transform_curve,
    transform_jacobians,
    transform_spec,
    verify_exactness,
)
from maslov.caustics import CurveOnL, detect_caustics, signature_jump_oracle
from maslov.errors import ExactnessError, NonSymplecticError, UnsupportedError
from maslov.quantize import loop_quantization_levels
from maslov.symplectic import PhasePoint, ProjectionJacobians, jacobians_at
from maslov.systems import harmonic_orbit, harmonic_spec, oscillator_pair_spec, torus_curve


def test_symplectic_validation():
    with pytest.raises(NonSymplecticError):
        LinearCanonical(1.0, 1.0, 1.0, 1.0)
    T = LinearCanonical(2.0, 0.0, 0.0, 0.5)
    assert T.symplectic_residual() < 1e-14


def test_random_symplectic_and_composition():
    rng = np.random.default_rng(0)
    J = symplectic_unit(2)
    for _ in range(10):
        M = random_symplectic(2, rng, scale=1.5)
        assert np.max(np.abs(M.T @ J @ M - J)) < 1e-10 * np.linalg.norm(M) ** 2
    a = LinearCanonical.random(2, rng)
    b = LinearCanonical.random(2, rng)
    ab = a.compose(b)
    assert ab.symplectic_residual() < 1e-10 * np.linalg.norm(ab.matrix) ** 2
    jac = jacobians_at(oscillator_pair_spec(1.0, 1.5),
                       PhasePoint([0.3, -0.4], [math.sqrt(1 - 0.09), math.sqrt(2.25 - 0.16)]))
    one = transform_jacobians(transform_jacobians(jac, b), a)
    two = transform_jacobians(jac, ab)
    np.testing.assert_allclose(one.E, two.E, atol=1e-12)
    np.testing.assert_allclose(one.F, two.F, atol=1e-12)


def test_transform_jacobians_examples():
    jac = ProjectionJacobians([[0.7]], [[-0.2]])
    same = transform_jacobians(jac, LinearCanonical.identity(1))
    assert same.E[0, 0] == 0.7 and same.F[0, 0] == -0.2
    swapped = transform_jacobians(jac, LinearCanonical.exchange(1))
    assert swapped.E[0, 0] == pytest.approx(-0.2)
    assert swapped.F[0, 0] == pytest.approx(-0.7)


def test_transformed_jacobians_stay_symmetric():
    rng = np.random.default_rng(3)
    spec = oscillator_pair_spec(1.0, 1.5)
    curve = torus_curve(1.0, 1.5, lambda t: (0.3 + t, 0.7 + 2 * t))
    for _ in range(5):
        T = LinearCanonical.random(2, rng)
        for t in np.linspace(0, 6, 7):
            jp = transform_jacobians(jacobians_at(spec, curve.point_at(t)), T)
            assert jp.symmetry_residual() < 1e-10 * max(1.0, np.linalg.norm(jp.FtE))


def test_oracle_jump_unchanged_by_transform():
    rng = np.random.default_rng(4)
    spec = harmonic_spec(0.5)
    curve = harmonic_orbit(0.5)
    for _ in range(5):
        T = LinearCanonical.random(1, rng)
        curve_p, spec_p = transform_curve(curve, T), transform_spec(spec, T)
        jumps = [signature_jump_oracle(curve_p, spec_p, ev)
                 for ev in detect_caustics(curve_p, spec_p)]
        assert jumps and all(j == 1 for j in jumps)


def test_k_examples():
    assert k_generator(LinearCanonical(2.0, 0.0, 0.3, 0.5)).evaluate([[1.0]], [[-3.0]]) == 0.0
    T = LinearCanonical(1.0, 1.0, 0.0, 1.0)
    assert k_generator(T).evaluate([[1.0]], [[1.0]]) == 0.5


def test_k_jumps_sit_on_crossings_for_rotations():
    spec = harmonic_spec(0.5)
    for theta in (0.3, 1.1, 2.4):
        T = LinearCanonical.rotation(theta)
        curve = CurveOnL(harmonic_orbit(0.5).point_at, (0.1, 0.1 + 2 * math.pi - 0.05),
                         flow_index=0)
        rep = verify_exactness(curve, spec, T, closed=False)
        assert rep.jump_audit_ok and rep.balanced
        events = {t for t, _ in rep.integral.crossings} | {t for t, _ in rep.integral_prime.crossings}
        assert {t for t, d in rep.k_jumps if d != 0} <= events


def test_singular_nonzero_b_is_unsupported():
    B = np.array([[1.0, 0.0], [0.0, 0.0]])
    T = LinearCanonical(np.eye(2), B, np.zeros((2, 2)), np.eye(2))
    with pytest.raises(UnsupportedError):
        k_generator(T)
    # closed loops need no K and still compare
    spec = oscillator_pair_spec(1.0, 1.5)
    loop = torus_curve(1.0, 1.5, lambda t: (0.3 + t, 0.7 + t))
    rep = verify_exactness(loop, spec, T, closed=True)
    assert rep.integral.value == rep.integral_prime.value


def test_closed_harmonic_loop_invariant():
    rng = np.random.default_rng(1)
    spec = harmonic_spec(0.5)
    loop = harmonic_orbit(0.5)
    for _ in range(20):
        rep = verify_exactness(loop, spec, LinearCanonical.random(1, rng, scale=1.0))
        assert rep.integral.value == rep.integral_prime.value == 2


def test_quarter_orbit_exchange():
    spec = harmonic_spec(0.5)
    # x = cos t: t in (-0.4, 0.9) crosses p = 0 at t = 0 and no x = 0 point
    quarter = CurveOnL(harmonic_orbit(0.5).point_at, (-0.4, 0.9), flow_index=0)
    rep = verify_exactness(quarter, spec, LinearCanonical.exchange(1))
    assert rep.integral.value == 1 and rep.integral_prime.value == 0
    assert rep.delta_k == rep.delta_mu == 1


def test_identity_transform_has_zero_delta_k():
    spec = harmonic_spec(0.5)
    arc = CurveOnL(harmonic_orbit(0.5).point_at, (0.3, 4.0), flow_index=0)
    rep = verify_exactness(arc, spec, LinearCanonical.identity(1))
    assert rep.delta_mu == 0 and rep.delta_k == 0


def test_two_dimensional_open_paths_balance():
    rng = np.random.default_rng(6)
    spec = oscillator_pair_spec(1.0, 1.5)
    arc = torus_curve(1.0, 1.5, lambda t: (0.3 + t, 0.7 + 2 * t), (0.0, 4.0))
    for _ in range(5):
        rep = verify_exactness(arc, spec, LinearCanonical.random(2, rng))
        assert rep.balanced and rep.delta_k == rep.delta_mu


def test_imbalance_is_reported_with_ledgers():
    spec = harmonic_spec(0.5)
    arc = CurveOnL(harmonic_orbit(0.5).point_at, (-0.4, 0.9), flow_index=0)

    class WrongK(KGenerator):
        def evaluate(self, E, Ep):
            return 0.0

    import maslov.canonical as canonical

    original = canonical.k_generator
    canonical.k_generator = lambda T: WrongK(T)
    try:
        with pytest.raises(ExactnessError) as info:
            verify_exactness(arc, spec, LinearCanonical.exchange(1))
    finally:
        canonical.k_generator = original
    assert info.value.report.integral.crossings


def test_quantization_is_representation_invariant():
    rng = np.random.default_rng(8)
    T = LinearCanonical.random(1, rng, scale=1.0)
    levels = loop_quantization_levels(
        lambda E: transform_curve(harmonic_orbit(E), T),
        lambda E: transform_spec(harmonic_spec(E), T),
        n_max=5, hbar=1.0, e_range=(1e-3, 10.0),
    )
    for lv in levels:
        assert lv.maslov_total == 2
        assert lv.energy == pytest.approx(lv.n + 0.5, rel=1e-8)
