"""Built-in problem families: observables, manifolds and curves.

Problems are built from evaluator objects, never from symbolic input. New
families only need to supply ``Observable`` instances (with or without
analytic derivatives) and a curve parametrization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .caustics import CurveOnL
from .symplectic import LagrangianSpec, Observable, PhasePoint


@dataclass(frozen=True)
class Potential:
    """A one-dimensional potential with first and second derivatives."""

    V: Callable[[float], float]
    dV: Callable[[float], float]
    d2V: Optional[Callable[[float], float]] = None
    name: str = "V"

    def __call__(self, x):
        return self.V(x)


def harmonic_potential(omega: float = 1.0, mass: float = 1.0) -> Potential:
    k = mass * omega * omega
    return Potential(lambda x: 0.5 * k * x * x, lambda x: k * x,
                     lambda x: k + 0.0 * x, name=f"harmonic(omega={omega})")


def polynomial_potential(coeffs: Sequence[float], name: str = "") -> Potential:
    """``V(x) = sum_k coeffs[k] x^k``."""
    P = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
    dP = P.deriv()
    d2P = dP.deriv()
    return Potential(lambda x: P(x), lambda x: dP(x), lambda x: d2P(x),
                     name=name or f"polynomial{tuple(coeffs)}")


def quartic_potential(coeff: float = 1.0) -> Potential:
    return polynomial_potential([0, 0, 0, 0, coeff], name=f"quartic({coeff})")


def kinetic_potential_observable(mass: float, potential: Potential) -> Observable:
    """``H = p^2 / 2M + V(x)`` with analytic gradient and Hessian."""
    M = float(mass)
    V, dV, d2V = potential.V, potential.dV, potential.d2V

    def hessian(pt):
        h = np.zeros((2, 2))
        if d2V is None:
            eps = 1e-5 * max(1.0, abs(pt.x[0]))
            h[0, 0] = (dV(pt.x[0] + eps) - dV(pt.x[0] - eps)) / (2 * eps)
        else:
            h[0, 0] = d2V(pt.x[0])
        h[1, 1] = 1.0 / M
        return h

    return Observable(
        value=lambda pt: pt.p[0] ** 2 / (2 * M) + V(pt.x[0]),
        grad_x=lambda pt: np.array([dV(pt.x[0])]),
        grad_p=lambda pt: np.array([pt.p[0] / M]),
        hessian=hessian,
        name="H",
    )


def kinetic_potential_spec(mass: float, potential: Potential, energy: float) -> LagrangianSpec:
    return LagrangianSpec([kinetic_potential_observable(mass, potential)], [energy],
                          name=f"{potential.name}, E={energy:g}")


def harmonic_spec(energy: float, omega: float = 1.0, mass: float = 1.0) -> LagrangianSpec:
    return kinetic_potential_spec(mass, harmonic_potential(omega, mass), energy)


def harmonic_orbit(energy: float, omega: float = 1.0, mass: float = 1.0,
                   t0: float = 0.25, periods: float = 1.0) -> CurveOnL:
    """Time-parametrized orbit ``x = A cos(omega t)``; default start avoids caustics."""
    A = math.sqrt(2.0 * energy / (mass * omega * omega))

    def point_at(t):
        return PhasePoint([A * math.cos(omega * t)], [-mass * A * omega * math.sin(omega * t)])

    return CurveOnL(point_at, (t0, t0 + periods * 2 * math.pi / omega), flow_index=0,
                    label=f"harmonic orbit E={energy:g}")


def well_loop(mass: float, potential: Potential, x_minus: float, x_plus: float,
              energy: float, base: float = -0.5 * math.pi) -> CurveOnL:
    """Closed energy loop of a single well, parametrized by an angle.

    ``x = c + h cos t`` sweeps between the turning points and
    ``p = -sgn(sin t) sqrt(2M(E - V))`` follows the flow direction; the
    result is smooth because ``E - V`` vanishes linearly at the turning points.
    """
    c = 0.5 * (x_minus + x_plus)
    h = 0.5 * (x_plus - x_minus)
    M = float(mass)
    V = potential.V

    def point_at(t):
        x = c + h * math.cos(t)
        kin = max(2.0 * M * (energy - V(x)), 0.0)
        return PhasePoint([x], [-math.copysign(1.0, math.sin(t)) * math.sqrt(kin)
                                if math.sin(t) != 0.0 else 0.0])

    return CurveOnL(point_at, (base, base + 2 * math.pi), label="energy loop")


def oscillator_pair_spec(a1: float, a2: float) -> LagrangianSpec:
    """Two uncoupled unit oscillators ``H_i = (p_i^2 + x_i^2)/2`` at amplitudes a_i.

    The manifold is a torus. Hessians are constant, so brackets of the
    Jacobian entries are analytic.
    """
    obs = []
    for i in range(2):
        def value(pt, i=i):
            return 0.5 * (pt.p[i] ** 2 + pt.x[i] ** 2)

        def gx(pt, i=i):
            g = np.zeros(2)
            g[i] = pt.x[i]
            return g

        def gp(pt, i=i):
            g = np.zeros(2)
            g[i] = pt.p[i]
            return g

        hess = np.zeros((4, 4))
        hess[i, i] = 1.0
        hess[2 + i, 2 + i] = 1.0
        obs.append(Observable(value, gx, gp, lambda pt, h=hess: h, name=f"H{i + 1}"))
    return LagrangianSpec(obs, [0.5 * a1 * a1, 0.5 * a2 * a2], name="oscillator pair")


def torus_point(a1: float, a2: float, theta1: float, theta2: float) -> PhasePoint:
    return PhasePoint([a1 * math.cos(theta1), a2 * math.cos(theta2)],
                      [-a1 * math.sin(theta1), -a2 * math.sin(theta2)])


def torus_curve(a1: float, a2: float, angles: Callable[[float], Sequence[float]],
                t_range=(0.0, 2 * math.pi), flow_index: Optional[int] = None,
                label: str = "torus curve") -> CurveOnL:
    """Curve on the oscillator torus from an angle path ``t -> (theta1, theta2)``.

    Increasing ``theta_i`` at unit rate is the flow of ``H_i``.
    """
    def point_at(t):
        th1, th2 = angles(t)
        return torus_point(a1, a2, th1, th2)

    return CurveOnL(point_at, t_range, flow_index=flow_index, label=label)


def phase_locked_curve(a1: float, a2: float, offset: float = -0.5 * math.pi,
                       t_range=(0.3, 0.3 + 2 * math.pi)) -> CurveOnL:
    """Orbit of ``H1 + H2`` with ``theta2 = theta1 + offset``.

    With ``offset = -pi/2`` every x-caustic (``p1 = 0`` or ``p2 = 0``) sits on
    a p-caustic (``x2 = 0`` or ``x1 = 0``), so ``det E = det F = 0`` together.
    """
    return torus_curve(a1, a2, lambda t: (t, t + offset), t_range,
                       label=f"phase-locked offset={offset:g}")


def quartic_touch_path(a1: float, a2: float, c: float, theta2: float = 0.7,
                       t_range=(-1.0, 1.0)) -> CurveOnL:
    """Open torus path ``theta1 = c (1 - t^2) - t^4``, ``theta2 = theta2 + 0.2 t``.

    The endpoints are the same for every ``c``. For ``c < 0`` the
    path misses ``p1 = 0``; at ``c = 0`` it touches it with quartic contact
    at ``t = 0``; for ``c > 0`` it crosses twice in opposite directions.
    """
    return torus_curve(a1, a2, lambda t: (c * (1 - t * t) - t ** 4, theta2 + 0.2 * t), t_range,
                       label=f"quartic touch c={c:g}")


def deformed_torus_loop(a1: float, a2: float, windings: Sequence[int],
                        coeffs: np.ndarray, s: float = 1.0,
                        base: Sequence[float] = (0.3, 0.7)) -> CurveOnL:
    """Closed loop ``theta_i = base_i + w_i t + s sum_k c_ik sin(k t + c'_ik)``.

    ``coeffs`` has shape ``(2, K, 2)`` holding amplitudes and phases. The
    loop stays closed for every ``s``, so varying ``s`` is a homotopy.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    ks = np.arange(1, coeffs.shape[1] + 1)
    w = [int(v) for v in windings]

    def angles(t):
        out = []
        for i in range(2):
            amp, ph = coeffs[i, :, 0], coeffs[i, :, 1]
            bump = np.sin(ks * t + ph) - np.sin(ph)
            out.append(base[i] + w[i] * t + s * float(amp @ bump))
        return out

    return torus_curve(a1, a2, angles, (0.0, 2 * math.pi),
                       label=f"deformed loop windings={tuple(w)} s={s:g}")
