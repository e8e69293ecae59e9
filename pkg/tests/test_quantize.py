import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import beta

from maslov.errors import InputError, ResolutionError, TurningPointError
from maslov.quantize import (
    GridSpec,
    OneDProblem,
    action_integral,
    bohr_sommerfeld_levels,
    convergence_order,
    local_indices,
    maslov_count,
    schrodinger_fd_eigenvalues,
    turning_points,
)
from maslov.systems import Potential, harmonic_potential, polynomial_potential, quartic_potential


@pytest.fixture(scope="module")
def harmonic():
    return OneDProblem(1.0, harmonic_potential(1.0, 1.0), 1.0, (-10.0, 10.0))


@pytest.fixture(scope="module")
def quartic():
    return OneDProblem(1.0, quartic_potential(), 1.0, (-6.0, 6.0))


@pytest.mark.parametrize("omega,mass,E", [(1.0, 1.0, 0.5), (1.7, 0.6, 3.2), (0.4, 2.5, 0.05)])
def test_harmonic_action_is_ellipse_area(omega, mass, E):
    prob = OneDProblem(mass, harmonic_potential(omega, mass), 1.0, (-40.0, 40.0))
    assert action_integral(prob, E) == pytest.approx(2 * math.pi * E / omega, rel=1e-10)


def test_quartic_action_against_independent_quadratures(quartic):
    # 1 - x^4 = (1 - x)(1 + x)(1 + x^2): QUADPACK's algebraic weight absorbs the
    # square-root endpoints, leaving a smooth factor
    val, _ = quad(lambda x: math.sqrt(2 * (1 + x * x)), -1.0, 1.0,
                  weight="alg", wvar=(0.5, 0.5), epsabs=0, epsrel=1e-13)
    oracle = 2 * val
    assert oracle == pytest.approx(math.sqrt(2) * beta(0.25, 1.5), rel=1e-13)
    assert oracle == pytest.approx(4.944199139470325, rel=1e-13)
    assert action_integral(quartic, 1.0) == pytest.approx(oracle, rel=1e-12)


def test_turning_points_and_rejections(harmonic):
    xm, xp = turning_points(harmonic, 0.5)
    assert (xm, xp) == pytest.approx((-1.0, 1.0), abs=1e-12)
    with pytest.raises(TurningPointError):
        action_integral(harmonic, -0.1)
    with pytest.raises(TurningPointError):
        action_integral(harmonic, 0.0)
    with pytest.raises(TurningPointError):
        action_integral(harmonic, 60.0)  # the orbit would leave the domain


def test_multi_well_is_rejected():
    double = OneDProblem(1.0, polynomial_potential([1.0, 0.0, -2.0, 0.0, 1.0]), 1.0, (-3.0, 3.0))
    with pytest.raises(TurningPointError):
        bohr_sommerfeld_levels(double, 2)
    with pytest.raises(TurningPointError):
        turning_points(double, 0.5)


def test_problem_validation():
    with pytest.raises(InputError):
        OneDProblem(-1.0, harmonic_potential())
    with pytest.raises(InputError):
        OneDProblem(1.0, harmonic_potential(), hbar=0.0)
    with pytest.raises(InputError):
        OneDProblem(1.0, harmonic_potential(), x_domain=(1.0, -1.0))


@pytest.mark.parametrize("E", [0.3, 2.0, 7.5])
def test_maslov_count_is_two_with_unit_events(harmonic, quartic, E):
    for prob in (harmonic, quartic):
        assert maslov_count(prob, E) == 2
        assert local_indices(prob, E) == [1, 1]


def test_harmonic_levels_are_half_integers(harmonic):
    levels = bohr_sommerfeld_levels(harmonic, 6)
    assert levels[0].energy == pytest.approx(0.5, rel=1e-10)
    for lv in levels:
        assert lv.maslov_total == 2
        assert lv.energy == pytest.approx(lv.n + 0.5, rel=1e-10)
        assert abs(lv.condition_residual(1.0)) < 1e-9


def test_hbar_scales_harmonic_levels():
    prob = OneDProblem(1.0, harmonic_potential(2.0, 1.0), 0.25, (-10.0, 10.0))
    for lv in bohr_sommerfeld_levels(prob, 3):
        assert lv.energy == pytest.approx(0.25 * 2.0 * (lv.n + 0.5), rel=1e-10)


def test_fd_harmonic_spectrum(harmonic):
    vals = schrodinger_fd_eigenvalues(harmonic, 6)
    np.testing.assert_allclose(vals, np.arange(6) + 0.5, atol=1e-6)


def test_fd_box_spectrum():
    L, M, hbar = 2.0, 1.3, 0.8
    box = OneDProblem(M, Potential(lambda x: 0.0 * np.asarray(x), lambda x: 0.0 * np.asarray(x)),
                      hbar, (0.0, L), hard_walls=True)
    vals = schrodinger_fd_eigenvalues(box, 4, GridSpec(n_points=400))
    n = np.arange(1, 5)
    np.testing.assert_allclose(vals, hbar ** 2 * math.pi ** 2 * n ** 2 / (2 * M * L * L), rtol=1e-8)


def test_fd_convergence_order(harmonic):
    order = convergence_order(harmonic, 4, 400)
    np.testing.assert_allclose(order, 2.0, atol=0.05)


def test_fd_resolution_checks(harmonic):
    with pytest.raises(ResolutionError):
        schrodinger_fd_eigenvalues(harmonic, 30, GridSpec(n_points=40))
    narrow = OneDProblem(1.0, harmonic_potential(), 1.0, (-2.0, 2.0))
    with pytest.raises(ResolutionError):
        schrodinger_fd_eigenvalues(narrow, 3)


def test_quartic_levels_match_fd(quartic):
    fd = schrodinger_fd_eigenvalues(quartic, 21)
    levels = bohr_sommerfeld_levels(quartic, 20, oracle=fd)
    assert levels[10].rel_error < 0.01
    assert levels[20].rel_error < levels[2].rel_error
    assert all(lv.maslov_total == 2 for lv in levels)
    assert all(b.energy > a.energy for a, b in zip(levels, levels[1:]))
