"""Phase-space primitives: points, observables, projection Jacobians.

Conventions
-----------
Phase space is R^{2n} with coordinates ``(x, p)``. For observables ``H_j``
defining a Lagrangian manifold, the projection Jacobians are

    E[i, j] = {x_i, H_j} =  dH_j/dp_i
    F[i, j] = {p_i, H_j} = -dH_j/dx_i

so that column ``j`` of the stacked matrix ``(E; F)`` is the Hamiltonian
vector field of ``H_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionError, NonSymmetricError, OffManifoldError
from .numerics import central_gradient


def _frozen(a):
    a = np.array(a, dtype=float).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = _frozen(self.x)
        p = _frozen(self.p)
        if x.size < 1 or x.size != p.size:
            raise DimensionError(
                f"x and p must have equal length >= 1, got {x.size} and {p.size}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.x.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.p])

    @classmethod
    def from_vector(cls, z) -> "PhasePoint":
        z = np.asarray(z, dtype=float).reshape(-1)
        if z.size % 2:
            raise DimensionError("phase-space vector must have even length")
        n = z.size // 2
        return cls(z[:n], z[n:])


@dataclass(frozen=True)
class Observable:
    """A phase-space function with optional analytic derivatives.

    ``grad_x`` / ``grad_p`` return length-n arrays; a missing one is replaced
    by central differences of ``value``. ``hessian`` (optional) returns the
    2n x 2n matrix of second derivatives ordered ``(x, p)``; it enables
    analytic Poisson brackets of the Jacobian entries.
    """

    value: Callable[[PhasePoint], float]
    grad_x: Optional[Callable[[PhasePoint], np.ndarray]] = None
    grad_p: Optional[Callable[[PhasePoint], np.ndarray]] = None
    hessian: Optional[Callable[[PhasePoint], np.ndarray]] = None
    name: str = ""

    @property
    def gradient_mode(self) -> str:
        if self.grad_x is not None and self.grad_p is not None:
            return "analytic"
        return "finite-difference"

    def __call__(self, pt: PhasePoint) -> float:
        return float(self.value(pt))

    def _fd_gradient(self, pt):
        n = pt.n
        return central_gradient(
            lambda z: self.value(PhasePoint(z[:n], z[n:])), pt.as_vector()
        )

    def gradient(self, pt: PhasePoint):
        """Return ``(d/dx, d/dp)`` at ``pt``."""
        gx = None if self.grad_x is None else np.asarray(self.grad_x(pt), float)
        gp = None if self.grad_p is None else np.asarray(self.grad_p(pt), float)
        if gx is None or gp is None:
            g = self._fd_gradient(pt)
            gx = g[: pt.n] if gx is None else gx
            gp = g[pt.n:] if gp is None else gp
        if gx.shape != (pt.n,) or gp.shape != (pt.n,):
            raise DimensionError(f"gradient of {self.name or 'observable'} has wrong shape")
        return gx.reshape(pt.n), gp.reshape(pt.n)

    def differential(self, pt: PhasePoint) -> np.ndarray:
        gx, gp = self.gradient(pt)
        return np.concatenate([gx, gp])

    @classmethod
    def coordinate(cls, i: int, n: int) -> "Observable":
        e = np.zeros(n)
        e[i] = 1.0
        return cls(lambda pt: pt.x[i], lambda pt: e, lambda pt: np.zeros(n),
                   lambda pt: np.zeros((2 * n, 2 * n)), name=f"x{i + 1}")

    @classmethod
    def momentum(cls, i: int, n: int) -> "Observable":
        e = np.zeros(n)
        e[i] = 1.0
        return cls(lambda pt: pt.p[i], lambda pt: np.zeros(n), lambda pt: e,
                   lambda pt: np.zeros((2 * n, 2 * n)), name=f"p{i + 1}")


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances; all relative to the scales named below."""

    on_manifold: float = 1e-8  # times max(1, |h_i|)
    bracket: float = 1e-7  # times |grad f| |grad g|
    symmetry: float = 1e-7  # times max(1, ||M||_inf)
    signature_zero: float = 1e-10  # times ||M||_inf


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class LagrangianSpec:
    """Joint level set ``H_i = h_i`` of ``n`` observables in involution on it.

    ``e_bracket(pt, k)``, when given, returns the analytic matrix of brackets
    ``{E_ij, H_k}``; otherwise they come from Hessians or finite differences.
    """

    observables: Sequence[Observable]
    levels: np.ndarray
    e_bracket: Optional[Callable[[PhasePoint, int], np.ndarray]] = None
    name: str = ""
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES)

    def __post_init__(self):
        obs = tuple(self.observables)
        levels = _frozen(self.levels)
        if len(obs) != levels.size or not obs:
            raise DimensionError(
                f"{len(obs)} observables but {levels.size} levels"
            )
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "levels", levels)

    @property
    def n(self) -> int:
        return len(self.observables)

    def values(self, pt: PhasePoint) -> np.ndarray:
        self._check_dim(pt)
        return np.array([h(pt) for h in self.observables])

    def residuals(self, pt: PhasePoint) -> np.ndarray:
        return self.values(pt) - self.levels

    def on_manifold(self, pt: PhasePoint, tol: Optional[float] = None) -> bool:
        tol = self.tolerances.on_manifold if tol is None else tol
        scale = np.maximum(1.0, np.abs(self.levels))
        return bool(np.all(np.abs(self.residuals(pt)) <= tol * scale))

    def check_on_manifold(self, pt: PhasePoint, tol: Optional[float] = None):
        if not self.on_manifold(pt, tol):
            res = self.residuals(pt)
            raise OffManifoldError(
                f"point is off the manifold {self.name!r}: residuals {res}", res
            )

    def differentials(self, pt: PhasePoint) -> np.ndarray:
        """n x 2n matrix whose row i is dH_i in the (dx, dp) basis."""
        self._check_dim(pt)
        return np.array([h.differential(pt) for h in self.observables])

    def hamiltonian_field(self, pt: PhasePoint, k: int) -> np.ndarray:
        gx, gp = self.observables[k].gradient(pt)
        return np.concatenate([gp, -gx])

    def _check_dim(self, pt):
        if pt.n != self.n:
            raise DimensionError(
                f"point has dimension {pt.n}, manifold has {self.n} observables"
            )


@dataclass(frozen=True)
class ProjectionJacobians:
    E: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        E = np.array(self.E, dtype=float, ndmin=2)
        F = np.array(self.F, dtype=float, ndmin=2)
        if E.shape != F.shape or E.shape[0] != E.shape[1]:
            raise DimensionError(f"E {E.shape} and F {F.shape} must be equal and square")
        E.setflags(write=False)
        F.setflags(write=False)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "F", F)

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @property
    def FtE(self) -> np.ndarray:
        return self.F.T @ self.E

    def symmetry_residual(self) -> float:
        M = self.FtE
        return float(np.max(np.abs(M - M.T)))


def poisson_bracket(f: Observable, g: Observable, pt: PhasePoint) -> float:
    """Canonical bracket ``sum_i df/dx_i dg/dp_i - df/dp_i dg/dx_i``."""
    fx, fp = f.gradient(pt)
    gx, gp = g.gradient(pt)
    return float(fx @ gp - fp @ gx)


def jacobians_at(spec: LagrangianSpec, pt: PhasePoint) -> ProjectionJacobians:
    """E and F at ``pt`` without any on-manifold check."""
    dH = spec.differentials(pt)
    n = spec.n
    return ProjectionJacobians(dH[:, n:].T, -dH[:, :n].T)


def projection_jacobians(
    spec: LagrangianSpec, pt: PhasePoint, tol: Optional[Tolerances] = None
) -> ProjectionJacobians:
    """E and F at an on-manifold point; checks that F^T E is symmetric."""
    tol = spec.tolerances if tol is None else tol
    spec.check_on_manifold(pt, tol.on_manifold)
    jac = jacobians_at(spec, pt)
    check_symmetric(jac.FtE, tol.symmetry)
    return jac


def check_symmetric(M, symmetry_tol: float = DEFAULT_TOLERANCES.symmetry):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
    asym = float(np.max(np.abs(M - M.T), initial=0.0))
    if asym > symmetry_tol * scale:
        raise NonSymmetricError(f"matrix is not symmetric (|M - M^T| = {asym:.3e})")
    return 0.5 * (M + M.T)


def signature(M, zero_tol: Optional[float] = None,
              symmetry_tol: float = DEFAULT_TOLERANCES.symmetry) -> int:
    """Number of positive minus number of negative eigenvalues.

    Eigenvalues within ``zero_tol`` of zero count as zero; the default is
    ``1e-10 * ||M||_inf``.
    """
    S = check_symmetric(M, symmetry_tol)
    norm = float(np.max(np.sum(np.abs(S), axis=1), initial=0.0))
    if zero_tol is None:
        zero_tol = DEFAULT_TOLERANCES.signature_zero * norm
    w = np.linalg.eigvalsh(S)
    return int(np.count_nonzero(w > zero_tol) - np.count_nonzero(w < -zero_tol))


def cofactor_matrix(E) -> np.ndarray:
    """Matrix of signed minors, ``C_ij = (-1)^(i+j) det(E without row i, col j)``.

    Computed from minors directly so it stays correct for singular ``E``.
    """
    E = np.asarray(E, dtype=float)
    if E.ndim != 2 or E.shape[0] != E.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {E.shape}")
    n = E.shape[0]
    if n == 1:
        return np.ones((1, 1))
    C = np.empty_like(E)
    for i in range(n):
        rows = np.delete(E, i, axis=0)
        for j in range(n):
            minor = np.delete(rows, j, axis=1)
            C[i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return C
