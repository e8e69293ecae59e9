"""Tetrahedra of four angular-momentum vectors and their Poisson geometry.

Vectors ``J1..J4`` with ``J1 + J2 + J3 + J4 = 0`` are the edges of a closed
quadrilateral with vertices

    P0 = 0, P1 = J1, P2 = J1 + J2, P3 = J1 + J2 + J3 = -J4,

and the diagonals ``P0P2`` and ``P1P3`` have lengths ``J12 = |J1 + J2|`` and
``J23 = |J2 + J3|``. ``V = J1 . (J2 x J3)`` is six times the volume.

Dihedral angles
---------------
``phi12`` is the signed angle about the unit vector along ``J1 + J2`` that
takes the component of ``P3`` perpendicular to that axis into the one of
``P1``. ``phi23`` is the signed angle about ``J2 + J3`` from ``-J1`` to
``J2`` (perpendicular components). With these choices ``V > 0`` exactly
when ``phi12`` lies in ``(0, pi)``, and then ``phi12 = alpha12`` and
``phi23 = -alpha23`` for the interior dihedral angles ``alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..errors import DimensionError, ForbiddenRegionError
from ..numerics import central_gradient

#: vertex pairs of the six edges
EDGES: Dict[str, Tuple[int, int]] = {
    "J1": (0, 1), "J2": (1, 2), "J3": (2, 3), "J4": (3, 0), "J12": (0, 2), "J23": (1, 3),
}


def _wrap(angle: float) -> float:
    """Map to ``[-pi, pi)``."""
    return (angle + math.pi) % (2 * math.pi) - math.pi


def signed_angle(a, b, axis) -> float:
    """Angle from ``a`` to ``b`` about unit ``axis`` (perpendicular parts only)."""
    a = a - axis * (a @ axis)
    b = b - axis * (b @ axis)
    return _wrap(math.atan2(float(np.cross(a, b) @ axis), float(a @ b)))


def rotate(v, axis, angle: float) -> np.ndarray:
    """Right-handed rotation of ``v`` about unit ``axis`` (Rodrigues)."""
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(axis, v) * s + axis * (axis @ v) * (1.0 - c)


@dataclass(frozen=True)
class Tetrahedron:
    """Four 3-vectors ``J1..J4`` (rows of ``vectors``) summing to zero."""

    vectors: np.ndarray
    closure_tol: float = 1e-10

    def __post_init__(self):
        J = np.array(self.vectors, dtype=float)
        if J.shape != (4, 3):
            raise DimensionError(f"expected a 4x3 array of vectors, got {J.shape}")
        scale = float(np.max(np.linalg.norm(J, axis=1)))
        if np.linalg.norm(J.sum(axis=0)) > self.closure_tol * max(scale, 1e-300):
            raise ValueError("vectors do not close: J1 + J2 + J3 + J4 != 0")
        J.setflags(write=False)
        object.__setattr__(self, "vectors", J)

    def __getitem__(self, r: int) -> np.ndarray:
        """``tet[r]`` is ``J_r`` for ``r`` in 1..4."""
        return self.vectors[r - 1]

    @property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)

    @property
    def J12(self) -> float:
        return float(np.linalg.norm(self[1] + self[2]))

    @property
    def J23(self) -> float:
        return float(np.linalg.norm(self[2] + self[3]))

    @property
    def V(self) -> float:
        return float(self[1] @ np.cross(self[2], self[3]))

    @property
    def vertices(self) -> np.ndarray:
        return np.vstack([np.zeros(3), np.cumsum(self.vectors[:3], axis=0)])

    def edge_lengths(self) -> Dict[str, float]:
        P = self.vertices
        return {k: float(np.linalg.norm(P[j] - P[i])) for k, (i, j) in EDGES.items()}

    def area(self, r: int, s: int) -> float:
        """``A_rs = |J_r x J_s|``."""
        return float(np.linalg.norm(np.cross(self[r], self[s])))

    @property
    def phi12(self) -> float:
        P = self.vertices
        axis = (self[1] + self[2]) / self.J12
        return signed_angle(P[3], P[1], axis)

    @property
    def phi23(self) -> float:
        axis = (self[2] + self[3]) / self.J23
        return signed_angle(-self[1], self[2], axis)

    def interior_dihedral(self, edge: str) -> float:
        """Interior dihedral angle in ``[0, pi]`` at the named edge."""
        i, j = EDGES[edge]
        k, l = (m for m in range(4) if m not in (i, j))
        return interior_dihedral(self.vertices, i, j, k, l)

    def interior_dihedrals(self) -> Dict[str, float]:
        return {e: self.interior_dihedral(e) for e in EDGES}

    def closure_residual(self) -> float:
        return float(np.linalg.norm(self.vectors.sum(axis=0)))


def interior_dihedral(P, i, j, k, l) -> float:
    e = P[j] - P[i]
    e = e / np.linalg.norm(e)
    a = P[k] - P[i]
    b = P[l] - P[i]
    a = a - e * (a @ e)
    b = b - e * (b @ e)
    c = float(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
    return math.acos(min(1.0, max(-1.0, c)))


def cayley_menger_v2(J1, J2, J3, J4, J12, J23) -> float:
    """``V^2`` from the Cayley-Menger determinant (``V`` = six times the volume).

    Negative values mean the lengths admit no real tetrahedron.
    """
    d = np.zeros((4, 4))
    lengths = {(0, 1): J1, (1, 2): J2, (2, 3): J3, (0, 3): J4, (0, 2): J12, (1, 3): J23}
    for (i, j), L in lengths.items():
        d[i, j] = d[j, i] = L * L
    cm = np.ones((5, 5))
    cm[0, 0] = 0.0
    cm[1:, 1:] = d
    return float(np.linalg.det(cm)) / 8.0


def _triangle_foot(side_a, side_b, base):
    """Foot ``s`` along ``base`` and height ``h`` of the apex at distances a, b."""
    s = (side_a ** 2 - side_b ** 2 + base ** 2) / (2 * base)
    return s, side_a ** 2 - s * s


def tetrahedron_from_dihedral(J1, J2, J3, J4, J12, phi12, tol: float = 1e-12) -> Tetrahedron:
    """Tetrahedron with the given lengths, diagonal ``J12`` and dihedral ``phi12``."""
    if J12 <= 0:
        raise ForbiddenRegionError("J12 must be positive")
    a, rho2 = _triangle_foot(J1, J2, J12)
    b, r2 = _triangle_foot(J4, J3, J12)
    for h2, face in ((rho2, "(J1, J2, J12)"), (r2, "(J3, J4, J12)")):
        if h2 < -tol * J12 * J12:
            raise ForbiddenRegionError(f"triangle {face} violates the triangle inequality")
    rho, r = math.sqrt(max(rho2, 0.0)), math.sqrt(max(r2, 0.0))
    P1 = np.array([a, rho * math.cos(phi12), rho * math.sin(phi12)])
    P2 = np.array([J12, 0.0, 0.0])
    P3 = np.array([b, r, 0.0])
    return Tetrahedron(np.array([P1, P2 - P1, P3 - P2, -P3]))


def dihedral_cosine(J1, J2, J3, J4, J12, J23) -> float:
    """``cos phi12`` of the tetrahedron with the six given lengths (unclamped)."""
    a, rho2 = _triangle_foot(J1, J2, J12)
    b, r2 = _triangle_foot(J4, J3, J12)
    denom = 2.0 * math.sqrt(max(r2, 0.0) * max(rho2, 0.0))
    if denom == 0.0:
        return math.inf
    return ((b - a) ** 2 + r2 + rho2 - J23 ** 2) / denom


def tetrahedron_from_lengths(J1, J2, J3, J4, J12, J23, orientation: int = 1,
                             tol: float = 1e-12) -> Tetrahedron:
    """Realize six edge lengths as vectors; ``orientation`` is the sign of V.

    Raises ``ForbiddenRegionError`` when no real tetrahedron exists (a face
    violates the triangle inequality or the Cayley-Menger determinant is
    negative).
    """
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    if min(J1, J2, J3, J4, J12, J23) <= 0:
        raise ForbiddenRegionError("all edge lengths must be positive")
    for tri in ((J1, J4, J23), (J2, J3, J23)):
        x, y, z = sorted(tri)
        if z > x + y + tol * z:
            raise ForbiddenRegionError(f"triangle {tri} violates the triangle inequality")
    c = dihedral_cosine(J1, J2, J3, J4, J12, J23)
    if not math.isfinite(c) or abs(c) > 1.0 + 1e3 * tol:
        raise ForbiddenRegionError(
            f"lengths {(J1, J2, J3, J4, J12, J23)} admit no real tetrahedron (cos phi12 = {c:.6g})"
        )
    c = min(1.0, max(-1.0, c))
    phi = math.acos(c) * orientation
    return tetrahedron_from_dihedral(J1, J2, J3, J4, J12, phi, tol)


def random_tetrahedron(rng: np.random.Generator, scale: float = 1.0) -> Tetrahedron:
    """Four Gaussian vectors made to close by subtracting their mean."""
    J = rng.normal(scale=scale, size=(4, 3))
    J -= J.mean(axis=0)
    return Tetrahedron(J)


# ---------------------------------------------------------------------------
# observables of the four vectors and their brackets


@dataclass(frozen=True)
class AngularObservable:
    """Function of ``(J1..J4)`` with an optional 4x3 gradient."""

    value: Callable[[np.ndarray], float]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __call__(self, tet: Tetrahedron) -> float:
        return float(self.value(tet.vectors))

    def grad(self, tet: Tetrahedron) -> np.ndarray:
        if self.gradient is not None:
            return np.asarray(self.gradient(tet.vectors), dtype=float).reshape(4, 3)
        g = central_gradient(lambda z: self.value(z.reshape(4, 3)), tet.vectors.reshape(-1))
        return g.reshape(4, 3)


def _unit(v):
    return v / np.linalg.norm(v)


def _g12(J):
    u = _unit(J[0] + J[1])
    return np.array([u, u, np.zeros(3), np.zeros(3)])


def _g23(J):
    u = _unit(J[1] + J[2])
    return np.array([np.zeros(3), u, u, np.zeros(3)])


def _gV(J):
    return np.array([np.cross(J[1], J[2]), np.cross(J[2], J[0]),
                     np.cross(J[0], J[1]), np.zeros(3)])


J12_OBS = AngularObservable(lambda J: float(np.linalg.norm(J[0] + J[1])), _g12, "J12")
J23_OBS = AngularObservable(lambda J: float(np.linalg.norm(J[1] + J[2])), _g23, "J23")
V_OBS = AngularObservable(lambda J: float(J[0] @ np.cross(J[1], J[2])), _gV, "V")


def angular_poisson_bracket(f: AngularObservable, g: AngularObservable,
                            tet: Tetrahedron) -> float:
    """``{f, g} = sum_r J_r . (grad_r f x grad_r g)``."""
    gf, gg = f.grad(tet), g.grad(tet)
    return float(sum(tet.vectors[r] @ np.cross(gf[r], gg[r]) for r in range(4)))


def j23_orbit(tet0: Tetrahedron, t: float) -> Tetrahedron:
    """Flow of J23 for time ``t``: J2 and J3 rotate rigidly about J2 + J3."""
    J = tet0.vectors
    axis_v = J[1] + J[2]
    n = float(np.linalg.norm(axis_v))
    if n == 0.0:
        raise ValueError("J23 = 0: the rotation axis is undefined")
    axis = axis_v / n
    return Tetrahedron(np.array([J[0], rotate(J[1], axis, t), rotate(J[2], axis, t), J[3]]))


def j12_orbit(tet0: Tetrahedron, t: float) -> Tetrahedron:
    """Flow of J12 for time ``t``: J1 and J2 rotate rigidly about J1 + J2."""
    J = tet0.vectors
    axis_v = J[0] + J[1]
    n = float(np.linalg.norm(axis_v))
    if n == 0.0:
        raise ValueError("J12 = 0: the rotation axis is undefined")
    axis = axis_v / n
    return Tetrahedron(np.array([rotate(J[0], axis, t), rotate(J[1], axis, t), J[2], J[3]]))


def flat_tolerance(tet_or_lengths, rel: float = 1e-9) -> float:
    """``rel * (geometric mean of the six edge lengths)^3``."""
    if isinstance(tet_or_lengths, Tetrahedron):
        L = np.array(list(tet_or_lengths.edge_lengths().values()))
    else:
        L = np.asarray(tet_or_lengths, dtype=float)
    return rel * float(np.exp(np.mean(np.log(L)))) ** 3
