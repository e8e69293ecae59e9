"""Bohr-Sommerfeld quantization of single wells and an independent FD oracle.

The quantization condition is read with the action in units of hbar,

    oint p dx = (2 pi n + (pi/2) m) hbar,

where ``m`` is the integral of the Maslov form over the closed orbit. For a
kinetic-plus-potential well each turning point contributes +1, so ``m = 2``
and the familiar zero-point shift of 1/2 appears.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq, minimize_scalar

from .caustics import DEFAULT_OPTS, CurveOnL, DetectionOpts, detect_caustics
from .errors import BracketError, InputError, ResolutionError, TurningPointError
from .maslov_form import MaslovIntegral, integrate_maslov_form
from .numerics import gauss_legendre_interval, safeguarded_newton, spectral_derivative
from .symplectic import LagrangianSpec
from .systems import Potential, kinetic_potential_spec, well_loop


@dataclass(frozen=True)
class OneDProblem:
    """``H = p^2/2M + V(x)`` on ``x_domain``.

    With ``hard_walls`` the domain ends are infinite walls; this is only
    meaningful for the FD oracle (the classical loop has no turning point
    there).
    """

    mass: float
    potential: Potential
    hbar: float = 1.0
    x_domain: Tuple[float, float] = (-10.0, 10.0)
    hard_walls: bool = False
    name: str = ""
    scan_points: int = 2001

    def __post_init__(self):
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise InputError(f"mass must be positive, got {self.mass}")
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise InputError(f"hbar must be positive, got {self.hbar}")
        a, b = (float(v) for v in self.x_domain)
        if not b > a:
            raise InputError(f"x_domain must be an increasing interval, got {self.x_domain}")
        object.__setattr__(self, "x_domain", (a, b))

    def V_array(self, xs: np.ndarray) -> np.ndarray:
        try:
            out = np.asarray(self.potential.V(xs), dtype=float)
            if out.shape == xs.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([float(self.potential.V(float(x))) for x in xs])

    def spec(self, energy: float) -> LagrangianSpec:
        return kinetic_potential_spec(self.mass, self.potential, energy)


@dataclass(frozen=True)
class QuantizationResult:
    n: int
    energy: float
    action: float
    maslov_total: int
    oracle_energy: Optional[float] = None
    rel_error: Optional[float] = None

    def condition_residual(self, hbar: float) -> float:
        """``action - (pi/2) m hbar - 2 pi n hbar``."""
        return self.action - (0.5 * math.pi * self.maslov_total + 2 * math.pi * self.n) * hbar


def _scan(problem: OneDProblem):
    xs = np.linspace(*problem.x_domain, problem.scan_points)
    return xs, problem.V_array(xs)


def well_minimum(problem: OneDProblem) -> Tuple[float, float]:
    """Location and value of the unique minimum of V; multi-well inputs are rejected."""
    xs, vs = _scan(problem)
    interior = (vs[1:-1] < vs[:-2]) & (vs[1:-1] <= vs[2:])
    idx = np.flatnonzero(interior) + 1
    if idx.size != 1:
        raise TurningPointError(
            f"expected a single well, found {idx.size} local minima of V on {problem.x_domain}"
        )
    k = int(idx[0])
    res = minimize_scalar(problem.potential.V, bounds=(xs[k - 1], xs[k + 1]),
                          method="bounded", options={"xatol": 1e-13})
    return float(res.x), float(res.fun)


def turning_points(problem: OneDProblem, energy: float) -> Tuple[float, float]:
    """The two solutions of ``V(x) = E`` in the domain, refined by safeguarded Newton."""
    xs, vs = _scan(problem)
    g = vs - energy
    allowed = g < 0
    if not np.any(allowed):
        raise TurningPointError(f"energy {energy:.6g} is below the well minimum")
    changes = np.flatnonzero(np.diff(allowed.astype(int)) != 0)
    if allowed[0] or allowed[-1]:
        raise TurningPointError(
            f"energy {energy:.6g} reaches the domain boundary; no closed orbit in {problem.x_domain}"
        )
    if changes.size != 2:
        raise TurningPointError(
            f"V(x) = {energy:.6g} has {changes.size} solutions; only single wells are supported"
        )
    f = lambda x: float(problem.potential.V(x)) - energy
    df = lambda x: float(problem.potential.dV(x))
    out = []
    for k in changes:
        out.append(safeguarded_newton(f, df, xs[k], xs[k + 1]))
    return out[0], out[1]


def action_integral(problem: OneDProblem, energy: float, rtol: float = 1e-10,
                    max_nodes: int = 4096) -> float:
    """``oint p dx = 2 int sqrt(2M(E - V)) dx`` between the turning points.

    The substitution ``x = c + h sin(phi)`` cancels the square-root endpoint
    behaviour, leaving a smooth integrand for Gauss-Legendre; the node count
    doubles until two successive values agree to ``rtol``.
    """
    xm, xp = turning_points(problem, energy)
    c, h = 0.5 * (xm + xp), 0.5 * (xp - xm)
    M = problem.mass

    def integrand(phi):
        x = c + h * np.sin(phi)
        kin = np.maximum(2.0 * M * (energy - problem.V_array(x)), 0.0)
        return 2.0 * np.sqrt(kin) * h * np.cos(phi)

    n = 16
    prev = gauss_legendre_interval(integrand, -0.5 * math.pi, 0.5 * math.pi, n)
    while n < max_nodes:
        n *= 2
        cur = gauss_legendre_interval(integrand, -0.5 * math.pi, 0.5 * math.pi, n)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    raise ResolutionError(f"action quadrature did not reach rtol={rtol} with {max_nodes} nodes")


def orbit_curve(problem: OneDProblem, energy: float) -> CurveOnL:
    xm, xp = turning_points(problem, energy)
    return well_loop(problem.mass, problem.potential, xm, xp, energy)


def maslov_integral(problem: OneDProblem, energy: float,
                    opts: DetectionOpts = DEFAULT_OPTS) -> MaslovIntegral:
    return integrate_maslov_form(orbit_curve(problem, energy), problem.spec(energy), opts,
                                 closed=True)


def maslov_count(problem: OneDProblem, energy: float,
                 opts: DetectionOpts = DEFAULT_OPTS) -> int:
    """Integral of the Maslov form over the closed orbit at ``energy``."""
    return maslov_integral(problem, energy, opts).value


def local_indices(problem: OneDProblem, energy: float,
                  opts: DetectionOpts = DEFAULT_OPTS) -> List[int]:
    return [e.local_index for e in detect_caustics(orbit_curve(problem, energy),
                                                   problem.spec(energy), opts)]


def energy_ceiling(problem: OneDProblem) -> float:
    """Largest energy whose orbit stays inside the domain."""
    a, b = problem.x_domain
    return float(min(problem.potential.V(a), problem.potential.V(b)))


def _solve_level(action, target, e_lo, e_hi, rtol):
    f = lambda E: action(E) - target
    lo, hi = e_lo, e_hi
    # grow the bracket geometrically from just above the minimum
    width = max(abs(e_lo), 1.0) * 1e-3
    hi = min(e_lo + width, e_hi)
    while f(hi) < 0:
        if hi >= e_hi:
            raise BracketError(f"action {target:.6g} not reached below E = {e_hi:.6g}")
        lo = hi
        width *= 2.0
        hi = min(e_lo + width, e_hi)
    return brentq(f, lo, hi, xtol=1e-300, rtol=rtol, maxiter=200), lo, hi


def _check_monotone(action, lo, hi, samples=5):
    Es = np.linspace(lo, hi, samples)
    vals = [action(E) for E in Es]
    if np.any(np.diff(vals) <= 0):
        raise BracketError(f"action is not increasing on [{lo:.6g}, {hi:.6g}]")


def bohr_sommerfeld_levels(problem: OneDProblem, n_max: int, rtol: float = 1e-12,
                           opts: DetectionOpts = DEFAULT_OPTS,
                           oracle: Optional[Sequence[float]] = None) -> List[QuantizationResult]:
    """Levels ``n = 0..n_max`` from ``oint p dx = (2 pi n + (pi/2) m) hbar``.

    ``m`` is computed per level by integrating the Maslov form over the
    orbit; it is never assumed. ``oracle`` optionally supplies reference
    energies for the relative-error column.
    """
    if n_max < 0:
        raise InputError("n_max must be >= 0")
    _, vmin = well_minimum(problem)
    e_top = energy_ceiling(problem)
    hbar = problem.hbar
    action = lambda E: action_integral(problem, E)
    # the zero-point Maslov count is taken from a probe orbit low in the well
    levels: List[QuantizationResult] = []
    e_floor = vmin + 1e-9 * max(1.0, abs(vmin))
    m_probe = maslov_count(problem, vmin + 1e-3 * (e_top - vmin), opts)
    for n in range(n_max + 1):
        target = (2 * math.pi * n + 0.5 * math.pi * m_probe) * hbar
        E, lo, hi = _solve_level(action, target, e_floor, e_top, rtol)
        m = maslov_count(problem, E, opts)
        if m != m_probe:
            # the count must be the same on every orbit of a single well;
            # re-solve with the count measured at the level itself
            target = (2 * math.pi * n + 0.5 * math.pi * m) * hbar
            E, lo, hi = _solve_level(action, target, e_floor, e_top, rtol)
        _check_monotone(action, lo, hi)
        S = action(E)
        ref = None if oracle is None or n >= len(oracle) else float(oracle[n])
        rel = None if ref is None else abs(E - ref) / abs(ref)
        levels.append(QuantizationResult(n, float(E), float(S), int(m), ref, rel))
        e_floor = E
    return levels


# ---------------------------------------------------------------------------
# loops given as curves (used for transformed problems)


def loop_action(curve: CurveOnL, samples: int = 256) -> float:
    """``oint sum_i p_i dx_i`` for a smooth closed curve, via FFT derivatives."""
    t0, t1 = curve.t_range
    ts = t0 + (t1 - t0) * np.arange(samples) / samples
    Z = np.array([curve.point_at(t).as_vector() for t in ts])
    n = Z.shape[1] // 2
    total = 0.0
    for i in range(n):
        dx = spectral_derivative(Z[:, i], t1 - t0)
        total += float(np.mean(Z[:, n + i] * dx)) * (t1 - t0)
    return curve.orientation * total


def loop_quantization_levels(curve_at: Callable[[float], CurveOnL],
                             spec_at: Callable[[float], LagrangianSpec],
                             n_max: int, hbar: float, e_range: Tuple[float, float],
                             rtol: float = 1e-12,
                             opts: DetectionOpts = DEFAULT_OPTS) -> List[QuantizationResult]:
    """Quantize a one-parameter family of closed loops labelled by energy.

    Both the action and the Maslov count are measured on the supplied
    curves, so any representation of the problem can be quantized.
    """
    action = lambda E: loop_action(curve_at(E))
    levels = []
    e_lo, e_hi = e_range
    for n in range(n_max + 1):
        if n == 0:
            e_probe = e_lo + 1e-3 * (e_hi - e_lo)
            m = integrate_maslov_form(curve_at(e_probe), spec_at(e_probe), opts,
                                      closed=True).value
        else:
            m = levels[0].maslov_total
        target = (2 * math.pi * n + 0.5 * math.pi * m) * hbar
        E = brentq(lambda e: action(e) - target, e_lo, e_hi, xtol=1e-300, rtol=rtol)
        m_here = integrate_maslov_form(curve_at(E), spec_at(E), opts, closed=True).value
        if m_here != m:
            raise BracketError(f"Maslov count changed from {m} to {m_here} along the family")
        levels.append(QuantizationResult(n, float(E), float(action(E)), int(m)))
    return levels


# ---------------------------------------------------------------------------
# finite-difference Schrodinger oracle


@dataclass(frozen=True)
class GridSpec:
    """Uniform Dirichlet grid with ``n_points`` interior nodes on the coarsest level.

    Refinement ``k`` uses ``2^k (n_points + 1) - 1`` interior nodes, halving h.
    """

    n_points: int = 2000
    domain: Optional[Tuple[float, float]] = None
    refinements: int = 2
    tail_tol: float = 1e-6
    points_per_wavelength: float = 8.0


def _fd_matrix(problem: OneDProblem, domain, N):
    a, b = domain
    h = (b - a) / (N + 1)
    x = a + h * np.arange(1, N + 1)
    k = problem.hbar ** 2 / (2.0 * problem.mass * h * h)
    diag = 2.0 * k + problem.V_array(x)
    off = -k * np.ones(N - 1)
    return x, h, diag, off


def fd_eigen(problem: OneDProblem, count: int, n_points: int,
             domain: Optional[Tuple[float, float]] = None, vectors: bool = False):
    """Lowest ``count`` eigenvalues of the three-point discretization (no extrapolation)."""
    domain = problem.x_domain if domain is None else domain
    x, h, diag, off = _fd_matrix(problem, domain, n_points)
    if vectors:
        w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))
        return w, v, x, h
    return eigh_tridiagonal(diag, off, eigvals_only=True, select="i",
                            select_range=(0, count - 1))


def schrodinger_fd_eigenvalues(problem: OneDProblem, count: int,
                               grid: GridSpec = GridSpec()) -> np.ndarray:
    """Lowest ``count`` eigenvalues of ``-(hbar^2/2M) psi'' + V psi``.

    Three grids with h, h/2, h/4 are combined by two levels of Richardson
    extrapolation (removing the h^2 and h^4 terms). Raises
    ``ResolutionError`` when the coarsest grid has fewer than
    ``points_per_wavelength`` nodes per local wavelength at the top level,
    or when the finest eigenfunctions have not decayed at a soft boundary.
    """
    if count < 1:
        raise InputError("count must be >= 1")
    domain = problem.x_domain if grid.domain is None else grid.domain
    sizes = [(grid.n_points + 1) * 2 ** k - 1 for k in range(grid.refinements + 1)]
    vals = [fd_eigen(problem, count, N, domain) for N in sizes]

    a, b = domain
    h0 = (b - a) / (sizes[0] + 1)
    xs = np.linspace(a, b, 4001)
    vmin = float(np.min(problem.V_array(xs)))
    p_max = math.sqrt(max(2.0 * problem.mass * (vals[-1][-1] - vmin), 0.0))
    if p_max > 0:
        wavelength = 2 * math.pi * problem.hbar / p_max
        if wavelength / h0 < grid.points_per_wavelength:
            raise ResolutionError(
                f"coarse grid has {wavelength / h0:.1f} points per wavelength; "
                f"need {grid.points_per_wavelength}"
            )
    if not problem.hard_walls:
        _, vecs, _, _ = fd_eigen(problem, count, sizes[-1], domain, vectors=True)
        peak = np.max(np.abs(vecs), axis=0)
        tail = np.maximum(np.abs(vecs[0]), np.abs(vecs[-1])) / peak
        if np.any(tail > grid.tail_tol):
            k = int(np.argmax(tail))
            raise ResolutionError(
                f"eigenfunction {k} has boundary tail {tail[k]:.2e} > {grid.tail_tol}; "
                "enlarge the domain"
            )

    level = [np.asarray(v) for v in vals]
    factor = 4.0
    for _ in range(grid.refinements):
        level = [(factor * fine - coarse) / (factor - 1.0)
                 for coarse, fine in zip(level, level[1:])]
        factor *= 4.0
    return level[-1]


def convergence_order(problem: OneDProblem, count: int, n_points: int,
                      domain: Optional[Tuple[float, float]] = None) -> np.ndarray:
    """Observed order ``log2((E_h - E_h/2) / (E_h/2 - E_h/4))`` per eigenvalue."""
    sizes = [(n_points + 1) * 2 ** k - 1 for k in range(3)]
    e = [fd_eigen(problem, count, N, domain) for N in sizes]
    return np.log2(np.abs(e[0] - e[1]) / np.abs(e[1] - e[2]))
