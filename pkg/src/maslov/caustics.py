"""Caustic location and the local Maslov index ``m = sgn u^T Edot v``.

A caustic of a curve on the Lagrangian manifold is a parameter value where
``det E`` vanishes. At a first-order caustic ``v`` spans ``ker E`` and
``u = F v`` spans the left kernel; the index is the sign of ``u^T Edot v``
with ``Edot`` the derivative of ``E`` along the curve.

Sign convention: indices are oriented by the traversal direction of the
curve. Reversing a curve negates every index and reverses event order.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    CoincidentCheckError,
    EndpointCausticError,
    GridTooCoarseError,
    NonGenericCausticError,
    NotACausticError,
    NumericalError,
    OracleError,
    OracleNotApplicableError,
)
from .numerics import CBRT_EPS, bisect_sign_change
from .symplectic import (
    LagrangianSpec,
    PhasePoint,
    check_symmetric,
    cofactor_matrix,
    jacobians_at,
    projection_jacobians,
    signature,
)

log = logging.getLogger(__name__)


class EvenOrderTouchWarning(UserWarning):
    """det E touches zero without changing sign; not counted as an event."""


@dataclass(frozen=True)
class CurveOnL:
    """A parametrized curve on the manifold.

    ``orientation = -1`` means the curve is traversed from ``t_range[1]`` to
    ``t_range[0]``. ``flow_index = k`` declares that the curve is an orbit of
    ``H_k`` parametrized by flow time. ``p_period`` marks momenta that are
    angles, so finite-difference tangents wrap them.
    """

    point_at: Callable[[float], PhasePoint]
    t_range: Tuple[float, float]
    flow_index: Optional[int] = None
    orientation: int = 1
    p_period: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        t0, t1 = float(self.t_range[0]), float(self.t_range[1])
        if not t1 > t0:
            raise ValueError(f"t_range must be increasing, got {self.t_range}")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        object.__setattr__(self, "t_range", (t0, t1))

    @property
    def length(self) -> float:
        return self.t_range[1] - self.t_range[0]

    @property
    def start_t(self) -> float:
        return self.t_range[0] if self.orientation > 0 else self.t_range[1]

    @property
    def end_t(self) -> float:
        return self.t_range[1] if self.orientation > 0 else self.t_range[0]

    def reversed(self) -> "CurveOnL":
        return replace(self, orientation=-self.orientation)

    def _central(self, t: float, h: float) -> np.ndarray:
        d = self.point_at(t + h).as_vector() - self.point_at(t - h).as_vector()
        if self.p_period is not None:
            n = d.size // 2
            P = self.p_period
            d[n:] = (d[n:] + 0.5 * P) % P - 0.5 * P
        return d / (2 * h)

    def tangent(self, t: float) -> np.ndarray:
        """dz/dt by central differences with one Richardson step (O(h^4))."""
        h = CBRT_EPS * max(1.0, abs(t), self.length)
        return (4.0 * self._central(t, 0.5 * h) - self._central(t, h)) / 3.0


def reverse_parameter(curve: CurveOnL) -> CurveOnL:
    """Same geometric path traversed backwards through ``t -> t0 + t1 - t``."""
    t0, t1 = curve.t_range
    f = curve.point_at
    return replace(curve, point_at=lambda t: f(t0 + t1 - t), flow_index=None)


def concatenate(first: CurveOnL, second: CurveOnL, tol: float = 1e-9) -> CurveOnL:
    """Join two forward-oriented curves whose endpoints match."""
    if first.orientation != 1 or second.orientation != 1:
        raise ValueError("concatenate expects forward-oriented curves")
    a = first.point_at(first.t_range[1]).as_vector()
    b = second.point_at(second.t_range[0]).as_vector()
    if np.max(np.abs(a - b)) > tol * max(1.0, np.max(np.abs(a))):
        raise ValueError("curves do not join")
    t0, t1 = first.t_range
    s0 = second.t_range[0]
    L1 = first.length
    f, g = first.point_at, second.point_at

    def point_at(t):
        return f(t) if t <= t1 else g(s0 + (t - t1))

    flow = first.flow_index if first.flow_index == second.flow_index else None
    return CurveOnL(point_at, (t0, t0 + L1 + second.length), flow_index=flow,
                    p_period=first.p_period)


@dataclass(frozen=True)
class DetectionOpts:
    samples: int = 512
    t_tol: float = 1e-10  # relative to the curve's parameter length
    endpoint_tol: float = 1e-9  # |det E| at endpoints, relative to grid max
    touch_tol: float = 1e-8  # relative to grid max of |det E|
    kernel_tol: float = 1e-6  # singular values relative to sigma_max
    deriv_tol: float = 1e-8
    residual_tol: float = 1e-6
    refine_levels: int = 3
    refine_factor: int = 16
    check_manifold: bool = True


DEFAULT_OPTS = DetectionOpts()


@dataclass(frozen=True)
class CausticEvent:
    t_star: float
    v: np.ndarray
    u: np.ndarray
    lambda_dot_sign: int
    local_index: int
    coincident: bool
    kernel_dim: int
    orientation: int = 1
    det_e_residual: float = 0.0
    u_residual: float = 0.0

    def flipped(self) -> "CausticEvent":
        """Same event with ``v -> -v`` (and hence ``u -> -u``)."""
        return replace(self, v=-self.v, u=-self.u)


@dataclass(frozen=True)
class Crossing:
    t_lo: float
    t_hi: float
    t_star: float
    sign_lo: int
    sign_hi: int


@dataclass(frozen=True)
class DetScan:
    crossings: Tuple[Crossing, ...]
    touches: Tuple[float, ...]
    scale: float


def det_e_along(curve: CurveOnL, spec: LagrangianSpec) -> Callable[[float], float]:
    def det(t):
        return float(np.linalg.det(jacobians_at(spec, curve.point_at(t)).E))
    return det


def _parabola_vertex(ts, ds):
    """Value of the parabola through three samples at its vertex, if inside."""
    try:
        a, b, c = np.polyfit(ts, ds, 2)
    except (np.linalg.LinAlgError, ValueError):
        return None
    if a == 0:
        return None
    tv = -b / (2 * a)
    if not ts[0] <= tv <= ts[-1]:
        return None
    return c - b * b / (4 * a)


def _nudge_zeros(E_at, ts: np.ndarray, Es: np.ndarray, ds: np.ndarray) -> None:
    """Move interior samples with ``det E == 0`` exactly slightly forward (in place).

    A zero sample would otherwise register as a sign change on both sides.
    """
    if len(ts) < 3:
        return
    dt = ts[1] - ts[0]
    for k in np.flatnonzero(ds[1:-1] == 0.0) + 1:
        shift = 1e-3 * dt
        while ds[k] == 0.0 and shift < 0.5 * dt:
            ts[k] += shift
            Es[k] = E_at(ts[k])
            ds[k] = float(np.linalg.det(Es[k]))
            shift *= 2


#: a cell is refined when sigma_min at its ends is within this factor of the
#: local variation of E, since only then can sigma_min reach zero inside it
CERTIFY_SAFETY = 2.0


def scan_det_e(curve: CurveOnL, spec: LagrangianSpec,
               opts: DetectionOpts = DEFAULT_OPTS) -> DetScan:
    """Bracket and refine every sign change of ``det E`` along the curve.

    Sign changes alone miss a close pair of caustics inside one grid cell.
    ``sigma_min(E)`` is 1-Lipschitz in ``E``, so a cell whose endpoint values
    of ``sigma_min`` add up to more than the variation of ``E`` across it
    (times ``CERTIFY_SAFETY``, with neighbouring cells as a curvature
    margin) cannot contain a caustic. Every other cell is subdivided up to
    ``opts.refine_levels`` times before its sign changes are bracketed.

    Crossings are returned in increasing parameter order regardless of the
    curve's orientation.
    """
    E_at = lambda t: np.atleast_2d(jacobians_at(spec, curve.point_at(t)).E)
    det = lambda t: float(np.linalg.det(E_at(t)))
    t0, t1 = curve.t_range
    ts = np.linspace(t0, t1, opts.samples + 1)
    Es = np.array([E_at(t) for t in ts])
    ds = np.linalg.det(Es)
    scale = float(np.max(np.abs(ds)))
    if scale == 0.0 or not np.isfinite(scale):
        raise NonGenericCausticError("det E vanishes identically along the curve")
    for end, d in ((t0, ds[0]), (t1, ds[-1])):
        if abs(d) <= opts.endpoint_tol * scale:
            raise EndpointCausticError(f"curve endpoint t={end} lies on a caustic")
    _nudge_zeros(E_at, ts, Es, ds)

    touch_abs = opts.touch_tol * scale
    brackets: List[Tuple[float, float, float, float]] = []
    touches: List[float] = []

    def subgrid(a, b, Ea, Eb, da, db):
        sub = np.linspace(a, b, opts.refine_factor + 1)
        sub_E = np.array([Ea] + [E_at(t) for t in sub[1:-1]] + [Eb])
        sub_d = np.linalg.det(sub_E)
        sub_d[0], sub_d[-1] = da, db
        _nudge_zeros(E_at, sub, sub_E, sub_d)
        return sub, sub_E, sub_d

    def process(ts, Es, ds, level):
        sig = np.linalg.svd(Es, compute_uv=False)[:, -1]
        var = np.linalg.norm(np.diff(Es, axis=0), 2, axis=(1, 2))
        local = var.copy()
        local[1:] = np.maximum(local[1:], var[:-1])
        local[:-1] = np.maximum(local[:-1], var[1:])
        refined = np.zeros(len(ts) - 1, dtype=bool)
        for k in range(len(ts) - 1):
            if level < opts.refine_levels and sig[k] + sig[k + 1] <= CERTIFY_SAFETY * local[k]:
                refined[k] = True
                process(*subgrid(ts[k], ts[k + 1], Es[k], Es[k + 1], ds[k], ds[k + 1]), level + 1)
            elif np.sign(ds[k]) != np.sign(ds[k + 1]):
                brackets.append((ts[k], ts[k + 1], ds[k], ds[k + 1]))
        a = np.abs(ds)
        for k in range(1, len(ts) - 1):
            if refined[k - 1] and refined[k]:
                continue
            if not (a[k] <= a[k - 1] and a[k] <= a[k + 1]):
                continue
            if np.sign(ds[k - 1]) != np.sign(ds[k]) or np.sign(ds[k]) != np.sign(ds[k + 1]):
                continue
            vert = _parabola_vertex(ts[k - 1:k + 2], ds[k - 1:k + 2])
            crosses = vert is not None and np.sign(vert) != np.sign(ds[k])
            tiny = a[k] <= touch_abs or (vert is not None and abs(vert) <= touch_abs)
            if not (crosses or tiny):
                continue
            if level >= opts.refine_levels:
                if crosses and not a[k] <= touch_abs:
                    raise GridTooCoarseError(
                        f"unresolved pair of caustics near t={ts[k]:.12g}; "
                        "increase the sampling density"
                    )
                touches.append(float(ts[k]))
                continue
            for j in (k - 1, k):
                if not refined[j]:
                    refined[j] = True
                    process(*subgrid(ts[j], ts[j + 1], Es[j], Es[j + 1], ds[j], ds[j + 1]),
                            level + 1)

    process(ts, Es, ds, 0)

    # duplicate brackets can come from overlapping refinement windows
    brackets.sort()
    unique = []
    for b in brackets:
        if unique and b[0] < unique[-1][1]:
            if b[1] <= unique[-1][1]:
                continue
        unique.append(b)

    xtol = opts.t_tol * curve.length
    crossings = []
    for lo, hi, dlo, dhi in unique:
        t_star, _ = bisect_sign_change(det, lo, hi, dlo, dhi, xtol=xtol)
        crossings.append(Crossing(lo, hi, t_star, int(np.sign(dlo)), int(np.sign(dhi))))
    for a_, b_ in zip(crossings, crossings[1:]):
        if b_.t_star - a_.t_star <= 2 * xtol:
            raise GridTooCoarseError(
                f"two caustics at t={a_.t_star:.12g} are not resolvable"
            )
    finest = (t1 - t0) / opts.samples / opts.refine_factor ** opts.refine_levels
    merged: List[float] = []
    for t in sorted(touches):
        if not merged or t - merged[-1] > 2 * finest:
            merged.append(t)
    for t in merged:
        msg = f"det E touches zero without sign change near t={t:.12g}"
        log.warning(msg)
        warnings.warn(msg, EvenOrderTouchWarning, stacklevel=3)
    return DetScan(tuple(crossings), tuple(merged), scale)


def kernel_vector(E, kernel_tol: float = 1e-8, scale: Optional[float] = None):
    """Unit right-singular vector of the smallest singular value of ``E``.

    ``kernel_dim`` counts singular values ``<= kernel_tol * scale`` where
    ``scale`` defaults to sigma_max of ``E``. For n = 1 that default can
    never detect a small nonzero entry, so callers on a manifold pass
    ``frame_scale`` instead. The sign of ``v`` is fixed so its
    largest-magnitude component is positive.
    """
    E = np.asarray(E, dtype=float)
    E = E.reshape(E.shape[0], -1) if E.ndim == 2 else np.atleast_2d(E)
    _, s, Vt = np.linalg.svd(E)
    v = Vt[-1].copy()
    smax = (s[0] if s.size else 0.0) if scale is None else float(scale)
    if smax == 0.0:
        kdim = E.shape[1]
    else:
        kdim = int(np.count_nonzero(s <= kernel_tol * smax))
    k = int(np.argmax(np.abs(v)))
    if v[k] < 0:
        v = -v
    return v, kdim


def frame_scale(jac) -> float:
    """Spectral norm of the stacked frame ``(E; F)``, which has full rank n."""
    return float(np.linalg.norm(np.vstack([jac.E, jac.F]), 2))


def null_space(M, tol: float, scale: Optional[float] = None) -> np.ndarray:
    """Orthonormal basis (columns) of the right null space of ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    _, s, Vt = np.linalg.svd(M)
    if scale is None:
        scale = s[0] if s.size else 0.0
    full = np.zeros(M.shape[1])
    full[: s.size] = s
    mask = full <= tol * scale if scale > 0 else np.ones(M.shape[1], bool)
    return Vt[mask].T


def cokernel_from_differentials(v, dH, residual_tol: float = 1e-6) -> np.ndarray:
    """Solve ``sum_i v_i dH_i = -sum_i u_i dx_i`` for ``u``.

    ``dH`` is the n x 2n matrix of differentials in the ``(dx, dp)`` basis.
    The ``dp`` part of ``v^T dH`` must vanish; otherwise the point is not a
    caustic with kernel vector ``v``.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    dH = np.atleast_2d(np.asarray(dH, dtype=float))
    n = v.size
    if dH.shape != (n, 2 * n):
        raise ValueError(f"dH must be {n}x{2 * n}, got {dH.shape}")
    w = v @ dH
    scale = max(float(np.linalg.norm(dH)) * float(np.linalg.norm(v)), np.finfo(float).tiny)
    dp = float(np.linalg.norm(w[n:]))
    if dp > residual_tol * scale:
        raise NotACausticError(
            f"sum v_i dH_i has dp-components of size {dp:.3e}; v is not in ker E"
        )
    return -w[:n]


def e_dot(spec: LagrangianSpec, pt: PhasePoint, flow_index: int,
          method: str = "auto") -> np.ndarray:
    """Matrix of brackets ``{E_ij, H_k}``: the derivative of E along X_k.

    ``method`` is ``"auto"`` (analytic when available), ``"analytic"`` or
    ``"fd"`` (central differences of E along the flow).
    """
    n = spec.n
    if not 0 <= flow_index < n:
        raise ValueError(f"flow_index {flow_index} out of range for n={n}")
    if method in ("auto", "analytic") and spec.e_bracket is not None:
        return np.asarray(spec.e_bracket(pt, flow_index), dtype=float).reshape(n, n)
    have_hess = all(h.hessian is not None for h in spec.observables)
    if method in ("auto", "analytic") and have_hess:
        gx, gp = spec.observables[flow_index].gradient(pt)
        out = np.empty((n, n))
        for j, h in enumerate(spec.observables):
            Hj = np.asarray(h.hessian(pt), dtype=float)
            # dE_ij/dz = row (n + i) of Hess H_j
            out[:, j] = Hj[n:, :n] @ gp - Hj[n:, n:] @ gx
        return out
    if method == "analytic":
        raise NumericalError("no analytic brackets available for e_dot")
    X = spec.hamiltonian_field(pt, flow_index)
    z = pt.as_vector()
    h = CBRT_EPS * max(1.0, float(np.max(np.abs(z)))) / max(1.0, float(np.max(np.abs(X))))
    Ep = jacobians_at(spec, PhasePoint.from_vector(z + h * X)).E
    Em = jacobians_at(spec, PhasePoint.from_vector(z - h * X)).E
    return (Ep - Em) / (2 * h)


def e_dot_along_curve(curve: CurveOnL, spec: LagrangianSpec, t: float) -> np.ndarray:
    """dE/dt in the curve's parameter (not oriented)."""
    if curve.flow_index is not None:
        return e_dot(spec, curve.point_at(t), curve.flow_index)
    h = CBRT_EPS * max(1.0, abs(t), curve.length)
    Ep = jacobians_at(spec, curve.point_at(t + h)).E
    Em = jacobians_at(spec, curve.point_at(t - h)).E
    return (Ep - Em) / (2 * h)


def local_maslov_index(event: CausticEvent, e_dot_matrix,
                       deriv_tol: float = DEFAULT_OPTS.deriv_tol) -> int:
    """``sgn(u^T Edot v)``, oriented by the curve direction."""
    Ed = np.atleast_2d(np.asarray(e_dot_matrix, dtype=float))
    u = np.atleast_1d(event.u)
    v = np.atleast_1d(event.v)
    val = float(u @ Ed @ v)
    scale = float(np.linalg.norm(Ed, 2) * np.linalg.norm(u) * np.linalg.norm(v))
    if scale == 0.0 or abs(val) <= deriv_tol * scale:
        raise NonGenericCausticError(
            f"u^T Edot v = {val:.3e} vanishes at t={event.t_star:.12g}; "
            "non-generic crossing, perturb the path"
        )
    return event.orientation * int(np.sign(val))


def _smallest_singular_ratio(M, scale: Optional[float] = None) -> float:
    s = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    ref = s[0] if scale is None else scale
    return float(s[-1] / ref) if ref > 0 else 0.0


def build_event(curve: CurveOnL, spec: LagrangianSpec, t_star: float,
                opts: DetectionOpts = DEFAULT_OPTS, scale: float = 1.0) -> CausticEvent:
    pt = curve.point_at(t_star)
    if opts.check_manifold:
        jac = projection_jacobians(spec, pt)
    else:
        jac = jacobians_at(spec, pt)
    fscale = frame_scale(jac)
    v, kdim = kernel_vector(jac.E, opts.kernel_tol, fscale)
    if kdim > 1:
        raise NonGenericCausticError(
            f"dim ker E = {kdim} at t={t_star:.12g}; higher-order caustic "
            "(perturb the path into first-order caustics)"
        )
    if kdim == 0:
        raise NotACausticError(
            f"det E changes sign at t={t_star:.12g} but E has no kernel at "
            f"kernel_tol={opts.kernel_tol}"
        )
    u = jac.F @ v
    u_cok = cokernel_from_differentials(v, spec.differentials(pt), opts.residual_tol)
    u_res = float(np.linalg.norm(u - u_cok))
    Ed = e_dot_along_curve(curve, spec, t_star)
    provisional = CausticEvent(t_star, v, u, 0, 0, False, kdim, curve.orientation)
    local = local_maslov_index(provisional, Ed, opts.deriv_tol)
    coincident = _smallest_singular_ratio(jac.F, fscale) <= opts.kernel_tol
    return CausticEvent(
        t_star=float(t_star),
        v=v,
        u=u,
        lambda_dot_sign=local * curve.orientation,
        local_index=local,
        coincident=bool(coincident),
        kernel_dim=kdim,
        orientation=curve.orientation,
        det_e_residual=abs(float(np.linalg.det(jac.E))) / scale,
        u_residual=u_res,
    )


def detect_caustics(curve: CurveOnL, spec: LagrangianSpec,
                    opts: DetectionOpts = DEFAULT_OPTS) -> List[CausticEvent]:
    """All first-order caustics on the curve, in traversal order."""
    scan = scan_det_e(curve, spec, opts)
    events = [build_event(curve, spec, c.t_star, opts, scan.scale) for c in scan.crossings]
    if curve.orientation < 0:
        events.reverse()
    return events


def signature_jump_oracle(curve: CurveOnL, spec: LagrangianSpec, event: CausticEvent,
                          dt: Optional[float] = None, max_halvings: int = 20,
                          kernel_tol: float = DEFAULT_OPTS.kernel_tol) -> int:
    """Independent index: ``(1/2) [sgn(F^T E)]`` jump across the caustic.

    Requires ``F`` nonsingular at and around the caustic. Returns 0 when
    ``E`` is nonsingular at ``t_star`` (no x-space caustic there) and when
    the signature is the same on both sides at every probed ``dt`` (an
    even-order touch of ``det E = 0``).
    """
    pt = curve.point_at(event.t_star)
    jac = jacobians_at(spec, pt)
    fscale = frame_scale(jac)
    if kernel_vector(jac.E, kernel_tol, fscale)[1] == 0:
        return 0
    if _smallest_singular_ratio(jac.F, fscale) <= kernel_tol:
        raise OracleNotApplicableError(
            f"F is singular at t={event.t_star:.12g} (coincident caustic); "
            "the signature-jump relation needs F nonsingular"
        )
    step = 1e-3 * curve.length if dt is None else float(dt)
    t0, t1 = curve.t_range
    # an even-order touch shows the same signature on both sides at every dt
    probes = unchanged = 0
    for _ in range(max_halvings + 1):
        before = event.t_star - curve.orientation * step
        after = event.t_star + curve.orientation * step
        if not (t0 <= min(before, after) and max(before, after) <= t1):
            step *= 0.5
            continue
        jb = jacobians_at(spec, curve.point_at(before))
        ja = jacobians_at(spec, curve.point_at(after))
        if min(_smallest_singular_ratio(jb.F, frame_scale(jb)),
               _smallest_singular_ratio(ja.F, frame_scale(ja))) <= kernel_tol:
            step *= 0.5
            continue
        wb = np.linalg.eigvalsh(check_symmetric(jb.FtE))
        wa = np.linalg.eigvalsh(check_symmetric(ja.FtE))
        nb_pos, na_pos = int(np.sum(wb > 0)), int(np.sum(wa > 0))
        probes += 1
        unchanged += na_pos == nb_pos
        if abs(na_pos - nb_pos) == 1:
            jump = signature(ja.FtE, zero_tol=0.0) - signature(jb.FtE, zero_tol=0.0)
            if jump not in (-2, 2):
                raise OracleError(f"signature jump {jump} not in {{-2, 0, 2}}")
            return jump // 2
        step *= 0.5
    if probes and unchanged == probes:
        return 0
    raise OracleError(
        f"could not isolate a single eigenvalue crossing at t={event.t_star:.12g}"
    )


@dataclass(frozen=True)
class CoincidentReport:
    kernel_intersection_trivial: bool
    direct_sum: bool
    restriction_injective: bool
    trace_nonzero: bool
    dim_ker_E: int
    dim_ker_F: int
    dim_ker_FtE: int
    trace_CtF: float
    details: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return (self.kernel_intersection_trivial and self.direct_sum
                and self.restriction_injective and self.trace_nonzero)


def coincident_caustic_checks(E, F, tol: float = 1e-8,
                              raise_on_failure: bool = True) -> CoincidentReport:
    """Verify the kernel theorems at a point where ``det E = 0``.

    (a) ker E and ker F intersect trivially; (b) ker F^T E = ker E (+) ker F;
    (c) F maps ker E injectively into ker E^T; (d) tr(C^T F) != 0.
    """
    E = np.atleast_2d(np.asarray(E, dtype=float))
    F = np.atleast_2d(np.asarray(F, dtype=float))
    n = E.shape[0]
    s = max(float(np.linalg.norm(E, 2)), float(np.linalg.norm(F, 2)))
    details = []

    stacked = np.vstack([E, F])
    sv = np.linalg.svd(stacked, compute_uv=False)
    a_ok = s > 0 and sv[-1] > tol * s
    if not a_ok:
        details.append("ker E and ker F share a nonzero vector")

    KE = null_space(E, tol, s)
    KF = null_space(F, tol, s)
    M = F.T @ E
    KM = null_space(M, tol, s * s)
    combined = np.hstack([KE, KF])
    rank = int(np.linalg.matrix_rank(combined, tol=tol)) if combined.size else 0
    in_kernel = combined.size == 0 or np.max(np.abs(M @ combined)) <= tol * max(s * s, 1e-300) * 10
    b_ok = (KM.shape[1] == KE.shape[1] + KF.shape[1] == rank) and bool(in_kernel)
    if not b_ok:
        details.append(
            f"dim ker F^T E = {KM.shape[1]}, dim ker E + dim ker F = "
            f"{KE.shape[1] + KF.shape[1]}, span rank {rank}"
        )

    if KE.shape[1] == 0:
        c_ok = True
    else:
        FK = F @ KE
        inj = int(np.linalg.matrix_rank(FK, tol=tol * max(s, 1e-300))) == KE.shape[1]
        into = np.max(np.abs(E.T @ FK)) <= tol * max(s * s, 1e-300) * 10
        c_ok = bool(inj and into)
        if not c_ok:
            details.append("F restricted to ker E is not injective into ker E^T")

    trace = float(np.trace(cofactor_matrix(E).T @ F))
    d_ok = s > 0 and abs(trace) > tol * s ** n
    if not d_ok:
        details.append(f"tr(C^T F) = {trace:.3e} vanishes")

    report = CoincidentReport(bool(a_ok), bool(b_ok), bool(c_ok), bool(d_ok),
                              KE.shape[1], KF.shape[1], KM.shape[1], trace,
                              tuple(details))
    if raise_on_failure and not report.passed:
        raise CoincidentCheckError("; ".join(details), report)
    return report


def validate_curve(curve: CurveOnL, spec: LagrangianSpec, samples: int = 16,
                   flow_tol: float = 1e-5) -> None:
    """Check on-manifold membership and, for orbits, the flow tangent."""
    for t in np.linspace(*curve.t_range, samples):
        pt = curve.point_at(t)
        spec.check_on_manifold(pt)
        if curve.flow_index is not None:
            X = spec.hamiltonian_field(pt, curve.flow_index)
            T = curve.tangent(t)
            err = float(np.max(np.abs(T - X)))
            if err > flow_tol * max(1.0, float(np.max(np.abs(X)))):
                raise NumericalError(
                    f"curve tangent differs from X_{curve.flow_index} by {err:.3e} at t={t}"
                )


def perturb_path(family: Callable[[float], CurveOnL], spec: LagrangianSpec,
                 eps_values: Sequence[float],
                 opts: DetectionOpts = DEFAULT_OPTS):
    """Try ``family(eps)`` for each eps until caustic detection is generic.

    Returns ``(eps, events)`` for the first member whose caustics are all
    first order with a nonvanishing crossing derivative. Nothing is ever
    perturbed implicitly; callers choose the family and the eps ladder.
    """
    last = None
    for eps in eps_values:
        try:
            return eps, detect_caustics(family(eps), spec, opts)
        except (NonGenericCausticError, GridTooCoarseError) as exc:
            last = exc
    raise NonGenericCausticError(f"no generic member found in the family: {last}")
