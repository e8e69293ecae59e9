"""Global Maslov index as the integral of a singular one-form.

The form is ``mu = sgn tr(C^T F) delta(det E) tr(C^T dE)`` with ``C`` the
cofactor matrix of ``E``. Because ``tr(C^T dE) = d(det E)`` and
``delta(f) df = (1/2) d sgn f``, its integral along a curve is a signed count
of the crossings of ``det E = 0``: each crossing contributes

    sgn tr(C^T F)|_{t*} * (sgn det E(after) - sgn det E(before)) / 2.

No smoothing of the delta function is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from .caustics import (
    DEFAULT_OPTS,
    CurveOnL,
    DetectionOpts,
    det_e_along,
    frame_scale,
    kernel_vector,
    scan_det_e,
)
from .errors import CorruptInputError, HomotopyInvarianceError, NonGenericCausticError
from .symplectic import LagrangianSpec, cofactor_matrix, jacobians_at


@dataclass(frozen=True)
class MaslovIntegral:
    value: int
    crossings: Tuple[Tuple[float, int], ...]
    path_closed: bool
    flagged: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.value != sum(w for _, w in self.crossings):
            raise ValueError("value must equal the sum of crossing weights")


def is_closed(curve: CurveOnL, tol: float = 1e-9) -> bool:
    a = curve.point_at(curve.t_range[0]).as_vector()
    b = curve.point_at(curve.t_range[1]).as_vector()
    d = b - a
    if curve.p_period is not None:
        n = d.size // 2
        P = curve.p_period
        d[n:] = (d[n:] + 0.5 * P) % P - 0.5 * P
    return bool(np.max(np.abs(d)) <= tol * max(1.0, float(np.max(np.abs(a)))))


def _crossing_weight(curve, spec, crossing, opts, trace_tol):
    pt = curve.point_at(crossing.t_star)
    if opts.check_manifold:
        spec.check_on_manifold(pt)
    jac = jacobians_at(spec, pt)
    _, kdim = kernel_vector(jac.E, opts.kernel_tol, frame_scale(jac))
    if kdim > 1:
        raise NonGenericCausticError(
            f"dim ker E = {kdim} at t={crossing.t_star:.12g}; the form applies "
            "to first-order caustics only"
        )
    C = cofactor_matrix(jac.E)
    trace = float(np.trace(C.T @ jac.F))
    scale = float(np.linalg.norm(C) * np.linalg.norm(jac.F))
    if scale == 0.0 or abs(trace) <= trace_tol * scale:
        raise CorruptInputError(
            f"tr(C^T F) = {trace:.3e} vanishes at a caustic (t={crossing.t_star:.12g}); "
            "this cannot happen on genuine Lagrangian data"
        )
    if curve.orientation > 0:
        before, after = crossing.sign_lo, crossing.sign_hi
    else:
        before, after = crossing.sign_hi, crossing.sign_lo
    return int(np.sign(trace)) * (after - before) // 2


def _is_flat_crossing(det, crossing, length):
    """Odd-order tangency: det E has a vanishing slope at the crossing."""
    h = 1e-4 * length
    t = crossing.t_star
    slope = (det(t + h) - det(t - h)) / (2 * h)
    chord = (abs(det(crossing.t_hi)) + abs(det(crossing.t_lo))) / max(
        crossing.t_hi - crossing.t_lo, 1e-300)
    return abs(slope) < 1e-6 * chord


def integrate_maslov_form(curve: CurveOnL, spec: LagrangianSpec,
                          opts: DetectionOpts = DEFAULT_OPTS,
                          closed: Optional[bool] = None,
                          trace_tol: float = 1e-10) -> MaslovIntegral:
    """Integral of the singular Maslov form along ``curve``.

    Odd-order tangencies of det E (higher-order caustics limits) are kept in
    the count through their sign change and reported in ``flagged``.
    """
    scan = scan_det_e(curve, spec, opts)
    crossings = list(scan.crossings)
    if curve.orientation < 0:
        crossings.reverse()
    det = det_e_along(curve, spec)
    ledger: List[Tuple[float, int]] = []
    flagged = []
    for c in crossings:
        w = _crossing_weight(curve, spec, c, opts, trace_tol)
        ledger.append((float(c.t_star), int(w)))
        if _is_flat_crossing(det, c, curve.length):
            flagged.append(float(c.t_star))
    if closed is None:
        closed = is_closed(curve)
    return MaslovIntegral(sum(w for _, w in ledger), tuple(ledger), bool(closed),
                          tuple(flagged))


def deform_and_recheck(family: Callable[[float], CurveOnL], spec: LagrangianSpec,
                       stages: int = 32, opts: DetectionOpts = DEFAULT_OPTS,
                       manifold_samples: int = 8) -> List[MaslovIntegral]:
    """Integrate the form over ``family(s)`` for ``stages`` values of s in [0, 1].

    Every stage is integrated from scratch. Raises
    ``HomotopyInvarianceError`` naming the first stage whose value differs
    from stage 0.
    """
    results: List[MaslovIntegral] = []
    for k, s in enumerate(np.linspace(0.0, 1.0, stages)):
        curve = family(float(s))
        for t in np.linspace(*curve.t_range, manifold_samples):
            spec.check_on_manifold(curve.point_at(t))
        res = integrate_maslov_form(curve, spec, opts)
        results.append(res)
        if res.value != results[0].value:
            raise HomotopyInvarianceError(
                f"stage {k} (s={s:.6g}) gives {res.value}, stage 0 gives "
                f"{results[0].value}", stage=k, integrals=results
            )
    return results
