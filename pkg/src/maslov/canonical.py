"""Linear canonical transformations and the Maslov-form generator K.

Under ``(x', p') = M (x, p)`` with ``M = [[A, B], [C, D]]`` symplectic, the
columns of ``(E; F)`` transform like phase-space vectors, so
``E' = A E + B F`` and ``F' = C E + D F``. The Maslov forms of the two
representations differ by an exact differential, ``mu - mu' = dK`` with

    K = (1/2) sgn(e' B e)            (n = 1; K = 0 when B = 0)
    K = (1/2) sgn(E^T B^{-1} E')     (n > 1, B nonsingular)

``K`` is piecewise constant along a curve; it is only evaluated at points
where both ``E`` and ``E'`` are nonsingular and its jumps are audited
against the crossing ledgers of the two integrals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import expm

from .caustics import DEFAULT_OPTS, CurveOnL, DetectionOpts
from .errors import DimensionError, ExactnessError, NonSymplecticError, UnsupportedError
from .maslov_form import MaslovIntegral, integrate_maslov_form
from .symplectic import (
    LagrangianSpec,
    Observable,
    PhasePoint,
    ProjectionJacobians,
    jacobians_at,
    signature,
)


def symplectic_unit(n: int) -> np.ndarray:
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


@dataclass(frozen=True)
class LinearCanonical:
    """Symplectic map ``(x, p) -> (A x + B p, C x + D p)``.

    The lower-left block is named ``C_blk`` to keep ``C`` for cofactors.
    """

    A: np.ndarray
    B: np.ndarray
    C_blk: np.ndarray
    D: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        blocks = [np.array(b, dtype=float, ndmin=2) for b in (self.A, self.B, self.C_blk, self.D)]
        n = blocks[0].shape[0]
        for b in blocks:
            if b.shape != (n, n):
                raise DimensionError("all four blocks must be n x n with the same n")
            b.setflags(write=False)
        for name, b in zip(("A", "B", "C_blk", "D"), blocks):
            object.__setattr__(self, name, b)
        if self.check:
            err = self.symplectic_residual()
            tol = 1e-10 * max(1.0, float(np.linalg.norm(self.matrix))) ** 2
            if err > tol:
                raise NonSymplecticError(f"M^T J M - J has max entry {err:.3e} > {tol:.3e}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C_blk, self.D]])

    def symplectic_residual(self) -> float:
        M = self.matrix
        J = symplectic_unit(self.n)
        return float(np.max(np.abs(M.T @ J @ M - J)))

    @classmethod
    def from_matrix(cls, M, check: bool = True) -> "LinearCanonical":
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
            raise DimensionError(f"expected a 2n x 2n matrix, got shape {M.shape}")
        n = M.shape[0] // 2
        return cls(M[:n, :n], M[:n, n:], M[n:, :n], M[n:, n:], check=check)

    @classmethod
    def identity(cls, n: int = 1) -> "LinearCanonical":
        return cls.from_matrix(np.eye(2 * n))

    @classmethod
    def exchange(cls, n: int = 1) -> "LinearCanonical":
        """``x' = p, p' = -x``."""
        return cls.from_matrix(symplectic_unit(n))

    @classmethod
    def rotation(cls, theta: float, n: int = 1) -> "LinearCanonical":
        """Phase-space rotation with ``B = sin(theta) I``."""
        c, s = np.cos(theta), np.sin(theta)
        I = np.eye(n)
        return cls(c * I, s * I, -s * I, c * I)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, scale: float = 1.0) -> "LinearCanonical":
        return cls.from_matrix(random_symplectic(n, rng, scale))

    def compose(self, other: "LinearCanonical") -> "LinearCanonical":
        """``self`` applied after ``other``."""
        return LinearCanonical.from_matrix(self.matrix @ other.matrix)

    def inverse(self) -> "LinearCanonical":
        J = symplectic_unit(self.n)
        return LinearCanonical.from_matrix(-J @ self.matrix.T @ J)

    def transform_point(self, pt: PhasePoint) -> PhasePoint:
        return PhasePoint.from_vector(self.matrix @ pt.as_vector())


def random_symplectic(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """``expm(J S)`` for a random symmetric ``S`` with entries of size ``scale``."""
    G = rng.normal(scale=scale, size=(2 * n, 2 * n))
    S = 0.5 * (G + G.T)
    return expm(symplectic_unit(n) @ S)


def transform_jacobians(jac: ProjectionJacobians, T: LinearCanonical) -> ProjectionJacobians:
    if jac.n != T.n:
        raise DimensionError(f"jacobians have n={jac.n}, transform has n={T.n}")
    return ProjectionJacobians(T.A @ jac.E + T.B @ jac.F, T.C_blk @ jac.E + T.D @ jac.F)


def transform_observable(h: Observable, T: LinearCanonical) -> Observable:
    """``H'(z') = H(M^{-1} z')`` with chain-rule derivatives."""
    Minv = T.inverse().matrix
    n = T.n

    def back(pt):
        return PhasePoint.from_vector(Minv @ pt.as_vector())

    def grad(pt):
        return Minv.T @ h.differential(back(pt))

    def hess(pt):
        return Minv.T @ np.asarray(h.hessian(back(pt)), float) @ Minv

    return Observable(
        value=lambda pt: h.value(back(pt)),
        grad_x=lambda pt: grad(pt)[:n],
        grad_p=lambda pt: grad(pt)[n:],
        hessian=hess if h.hessian is not None else None,
        name=f"{h.name}'",
    )


def transform_spec(spec: LagrangianSpec, T: LinearCanonical) -> LagrangianSpec:
    if spec.n != T.n:
        raise DimensionError(f"spec has n={spec.n}, transform has n={T.n}")
    return LagrangianSpec([transform_observable(h, T) for h in spec.observables],
                          spec.levels, name=f"{spec.name} (transformed)",
                          tolerances=spec.tolerances)


def transform_curve(curve: CurveOnL, T: LinearCanonical) -> CurveOnL:
    if curve.p_period is not None:
        raise UnsupportedError("angle-valued momenta cannot be mixed linearly")
    f = curve.point_at
    return CurveOnL(lambda t: T.transform_point(f(t)), curve.t_range, curve.flow_index,
                    curve.orientation, None, f"{curve.label} (transformed)")


@dataclass(frozen=True)
class KGenerator:
    """Evaluator of ``K(E, E')`` for a fixed transform."""

    T: LinearCanonical

    def __call__(self, E, Ep) -> float:
        return self.evaluate(E, Ep)

    def evaluate(self, E, Ep) -> float:
        E = np.array(E, dtype=float, ndmin=2)
        Ep = np.array(Ep, dtype=float, ndmin=2)
        B = self.T.B
        n = self.T.n
        if not np.any(B):
            return 0.0
        if n == 1:
            return 0.5 * float(np.sign(Ep[0, 0] * B[0, 0] * E[0, 0]))
        s = np.linalg.svd(B, compute_uv=False)
        if s[-1] <= 1e-12 * s[0]:
            raise UnsupportedError(
                "K is only defined for nonsingular B when n > 1 (B singular but nonzero)"
            )
        M = E.T @ np.linalg.solve(B, Ep)
        M = 0.5 * (M + M.T)
        return 0.5 * signature(M)


def k_generator(T: LinearCanonical) -> KGenerator:
    gen = KGenerator(T)
    if T.n > 1 and np.any(T.B):
        s = np.linalg.svd(T.B, compute_uv=False)
        if s[-1] <= 1e-12 * s[0]:
            raise UnsupportedError(
                "K is only defined for nonsingular B when n > 1 (B singular but nonzero)"
            )
    return gen


@dataclass(frozen=True)
class ExactnessReport:
    integral: MaslovIntegral
    integral_prime: MaslovIntegral
    closed: bool
    k_start: Optional[float]
    k_end: Optional[float]
    k_jumps: Tuple[Tuple[float, float], ...] = ()
    jump_audit_ok: Optional[bool] = None

    @property
    def delta_mu(self) -> int:
        return self.integral.value - self.integral_prime.value

    @property
    def delta_k(self) -> Optional[float]:
        if self.k_start is None:
            return None
        return self.k_end - self.k_start

    @property
    def balanced(self) -> bool:
        if self.closed:
            ok = self.delta_mu == 0
        else:
            ok = self.delta_k is not None and self.delta_mu == self.delta_k
        return ok and self.jump_audit_ok is not False


def _k_at(curve, spec, spec_p, curve_p, gen, t):
    E = jacobians_at(spec, curve.point_at(t)).E
    Ep = jacobians_at(spec_p, curve_p.point_at(t)).E
    return gen.evaluate(E, Ep)


def _audit_k_jumps(curve, spec, curve_p, spec_p, gen, integral, integral_p):
    """n = 1: every jump of K sits on exactly one crossing of e = 0 or e' = 0."""
    events = sorted({t for t, _ in integral.crossings} | {t for t, _ in integral_p.crossings})
    t0, t1 = curve.t_range
    knots = [t0] + events + [t1]
    values = []
    for a, b in zip(knots, knots[1:]):
        values.append(_k_at(curve, spec, spec_p, curve_p, gen, 0.5 * (a + b)))
    jumps = []
    ok = True
    for t, before, after in zip(events, values, values[1:]):
        d = after - before
        jumps.append((t, d))
        if d not in (-1.0, 0.0, 1.0):
            ok = False
    # K may jump only at listed events, so the endpoints must match the
    # end segments
    if values and (values[0] != _k_at(curve, spec, spec_p, curve_p, gen, t0)
                   or values[-1] != _k_at(curve, spec, spec_p, curve_p, gen, t1)):
        ok = False
    if curve.orientation < 0:
        jumps = [(t, -d) for t, d in reversed(jumps)]
    return tuple(jumps), ok


def verify_exactness(curve: CurveOnL, spec: LagrangianSpec, T: LinearCanonical,
                     opts: DetectionOpts = DEFAULT_OPTS, closed: Optional[bool] = None,
                     raise_on_failure: bool = True) -> ExactnessReport:
    """Check ``int mu - int mu' = K(end) - K(start)`` (or ``oint mu = oint mu'``).

    Both integrals are computed independently: ``mu`` from ``spec`` along
    ``curve`` and ``mu'`` from the transformed spec along the image curve.
    """
    spec_p = transform_spec(spec, T)
    curve_p = transform_curve(curve, T)
    mu = integrate_maslov_form(curve, spec, opts, closed=closed)
    mu_p = integrate_maslov_form(curve_p, spec_p, opts, closed=mu.path_closed)
    is_closed = mu.path_closed
    k_start = k_end = None
    jumps: Tuple[Tuple[float, float], ...] = ()
    audit = None
    if not is_closed:
        gen = k_generator(T)
        k_start = _k_at(curve, spec, spec_p, curve_p, gen, curve.start_t)
        k_end = _k_at(curve, spec, spec_p, curve_p, gen, curve.end_t)
        if T.n == 1:
            jumps, audit = _audit_k_jumps(curve, spec, curve_p, spec_p, gen, mu, mu_p)
    report = ExactnessReport(mu, mu_p, is_closed, k_start, k_end, jumps, audit)
    if raise_on_failure and not report.balanced:
        raise ExactnessError(
            f"imbalance: int mu = {mu.value}, int mu' = {mu_p.value}, "
            f"K: {k_start} -> {k_end}; ledgers {mu.crossings} / {mu_p.crossings}",
            report,
        )
    return report
