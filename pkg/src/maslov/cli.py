"""Command-line interface: ``maslov <command> ...``.

Commands
--------
bohr-sommerfeld FILE     levels of a ``kind = oneD`` problem
maslov-curve FILE        caustic events and the Maslov-form integral on a curve
sixj J1 J2 J12 J3 J4 J23 exact and/or asymptotic 6j symbols (or ``--file``)
canonical-check FILE     Maslov-form invariance under random Sp(2) transforms

Tables go to stdout with every number at 15 significant digits; notes and
errors go to stderr. Exit codes: 0 success, 1 input error, 2 tolerance or
acceptance failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .caustics import CurveOnL, DetectionOpts, detect_caustics
from .canonical import LinearCanonical, verify_exactness
from .errors import (
    CausticQueryError,
    EndpointCausticError,
    ForbiddenRegionError,
    InputError,
    MaslovError,
    NumericalError,
    ProblemFileError,
    UnsupportedError,
)
from .maslov_form import integrate_maslov_form
from .problem_file import ProblemFile, load_problem_file
from .quantize import GridSpec, OneDProblem, bohr_sommerfeld_levels, schrodinger_fd_eigenvalues
from .sixj.geometry import tetrahedron_from_lengths
from .sixj.racah import SixJQuery, sixj_exact
from .sixj.semiclassical import (
    SIXJ_OPTS,
    middle_fraction,
    node_count,
    normalized_rms_error,
    orbit_curve,
    orbit_segments,
    orbit_spec,
    pole_times,
    sixj_asymptotic,
)
from .systems import (
    harmonic_orbit,
    harmonic_potential,
    harmonic_spec,
    oscillator_pair_spec,
    phase_locked_curve,
    polynomial_potential,
    quartic_potential,
    torus_curve,
)

EXIT_OK, EXIT_INPUT, EXIT_TOLERANCE, EXIT_NUMERICAL = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# tables


@dataclass
class Table:
    name: str
    columns: Tuple[str, ...]
    rows: List[Tuple[Any, ...]] = field(default_factory=list)

    def add(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(values)


def format_value(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return f"{v:.15g}"
    return str(v)


def _json_value(v: Any) -> Any:
    if v is None or isinstance(v, (bool, np.bool_)):
        return None if v is None else bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if not math.isfinite(v) else float(f"{v:.15g}")
    return str(v)


def render(tables: Sequence[Table], fmt: str) -> str:
    out = io.StringIO()
    for k, table in enumerate(tables):
        if fmt == "json-lines":
            for row in table.rows:
                record = {"table": table.name}
                record.update({c: _json_value(v) for c, v in zip(table.columns, row)})
                out.write(json.dumps(record) + "\n")
            continue
        if k:
            out.write("\n")
        out.write(f"# {table.name}\n")
        cells = [[format_value(v) for v in row] for row in table.rows]
        if fmt == "csv":
            w = csv.writer(out, lineterminator="\n")
            w.writerow(table.columns)
            w.writerows(cells)
        else:
            widths = [max([len(c)] + [len(r[i]) for r in cells]) for i, c in enumerate(table.columns)]
            out.write("  ".join(c.rjust(w) for c, w in zip(table.columns, widths)).rstrip() + "\n")
            for r in cells:
                out.write("  ".join(v.rjust(w) for v, w in zip(r, widths)).rstrip() + "\n")
    return out.getvalue()


def note(message: str) -> None:
    print(f"note: {message}", file=sys.stderr)


@dataclass
class Result:
    tables: List[Table]
    status: int = EXIT_OK
    message: str = ""


# ---------------------------------------------------------------------------
# problem construction


def _detection_opts(pf: ProblemFile, base: DetectionOpts = DetectionOpts()) -> DetectionOpts:
    kw = {k: pf.tol(k) for k in ("kernel_tol", "t_tol", "touch_tol")
          if k in pf.tolerances}
    return DetectionOpts(**{**base.__dict__, **kw})


def one_d_problem(pf: ProblemFile) -> OneDProblem:
    name = pf.get("potential")
    mass = pf.get("mass")
    if not mass > 0:
        raise ProblemFileError(f"{pf.source}: mass must be positive, got {mass}")
    if name == "harmonic":
        potential = harmonic_potential(pf.get("omega"), mass)
    elif name == "quartic":
        potential = quartic_potential(pf.get("coeff"))
    else:
        pf.require("coeffs")
        potential = polynomial_potential(pf.get("coeffs"))
    return OneDProblem(mass, potential, pf.get("hbar"), (pf.get("x_min"), pf.get("x_max")),
                       name=name)


def _query_from(pf: ProblemFile) -> SixJQuery:
    keys = ("j1", "j2", "j12", "j3", "j4", "j23")
    pf.require(*keys)
    return SixJQuery(*(pf.get(k) for k in keys))


def curve_problem(pf: ProblemFile):
    """Return ``(curves, spec, opts, query_or_None, split)`` for a ``kind = curve`` file.

    A 6j orbit that passes through the ``J12 = 0`` chart pole comes back as
    open pieces with ``split = True``; every other system gives one curve.
    """
    pf.require("system")
    system = pf.get("system")
    t0, t1 = pf.get("t_start"), pf.get("t_end")
    if system == "harmonic":
        spec = harmonic_spec(pf.get("energy"), pf.get("omega"), pf.get("mass"))
        curve = harmonic_orbit(pf.get("energy"), pf.get("omega"), pf.get("mass"))
        opts = _detection_opts(pf)
        query = None
    elif system == "torus":
        a1, a2 = pf.get("a1"), pf.get("a2")
        w1, w2 = pf.get("winding1"), pf.get("winding2")
        spec = oscillator_pair_spec(a1, a2)
        curve = torus_curve(a1, a2, lambda t: (0.3 + w1 * t, 0.7 + w2 * t),
                            label=f"torus loop ({w1}, {w2})")
        opts = _detection_opts(pf)
        query = None
    elif system == "phase-locked":
        a1, a2 = pf.get("a1"), pf.get("a2")
        spec = oscillator_pair_spec(a1, a2)
        curve = phase_locked_curve(a1, a2, pf.get("offset"))
        opts = _detection_opts(pf)
        query = None
    else:
        query = _query_from(pf)
        tet = tetrahedron_from_lengths(*query.semiclassical_lengths())
        curve = orbit_curve(tet)
        spec = orbit_spec(tet)
        opts = _detection_opts(pf, SIXJ_OPTS)
    if t0 is not None or t1 is not None:
        a, b = curve.t_range
        curve = CurveOnL(curve.point_at, (a if t0 is None else t0, b if t1 is None else t1),
                         flow_index=curve.flow_index, p_period=curve.p_period,
                         label=curve.label + " (segment)")
    elif query is not None and pole_times(tet):
        return orbit_segments(tet), spec, opts, query, True
    return [curve], spec, opts, query, False


# ---------------------------------------------------------------------------
# commands


def cmd_bohr_sommerfeld(pf: ProblemFile, n_max: Optional[int] = None,
                        oracle: bool = False) -> Result:
    if pf.kind != "oneD":
        raise ProblemFileError(f"{pf.source}: bohr-sommerfeld needs kind = oneD, got {pf.kind}")
    problem = one_d_problem(pf)
    n_max = pf.get("n_max") if n_max is None else n_max
    if n_max < 0:
        raise InputError("n_max must be >= 0")
    ref = None
    if oracle:
        ref = schrodinger_fd_eigenvalues(problem, n_max + 1, GridSpec(n_points=pf.get("fd_points")))
    levels = bohr_sommerfeld_levels(problem, n_max, rtol=pf.tol("rtol"),
                                    opts=_detection_opts(pf), oracle=ref)
    table = Table("levels", ("n", "energy", "action", "maslov_total", "oracle_energy", "rel_error"))
    for lv in levels:
        table.add(lv.n, lv.energy, lv.action, lv.maslov_total, lv.oracle_energy, lv.rel_error)
    result = Result([table])
    if oracle:
        bound = pf.tol("oracle_rel")
        bad = [lv.n for lv in levels if lv.n >= pf.get("oracle_min_n") and lv.rel_error > bound]
        if bad:
            result.status = EXIT_TOLERANCE
            result.message = f"rel_error above {bound:g} at n = {', '.join(map(str, bad))}"
    return result


def cmd_maslov_curve(pf: ProblemFile) -> Result:
    if pf.kind != "curve":
        raise ProblemFileError(f"{pf.source}: maslov-curve needs kind = curve, got {pf.kind}")
    curves, spec, opts, query, split = curve_problem(pf)
    events = [ev for c in curves for ev in detect_caustics(c, spec, opts)]
    if not split:
        integral = integrate_maslov_form(curves[0], spec, opts)
        mu_total, closed, flagged = integral.value, integral.path_closed, integral.flagged
    else:
        note(f"the orbit passes through J12 = 0 {len(curves)} time(s); it is scanned "
             "in pieces between those chart poles")
        parts = [integrate_maslov_form(c, spec, opts, closed=False) for c in curves]
        mu_total = sum(p.value for p in parts)
        closed, flagged = True, tuple(t for p in parts for t in p.flagged)
    cols = ["event", "t_star", "local_index", "det_e_residual", "coincident"]
    expected = []
    if query is not None:
        cols.append("sgn_cos_phi12")
        from .sixj.geometry import j23_orbit

        tet0 = tetrahedron_from_lengths(*query.semiclassical_lengths())
        expected = [int(np.sign(math.cos(j23_orbit(tet0, ev.t_star).phi12))) for ev in events]
    table = Table("events", tuple(cols))
    for k, ev in enumerate(events):
        row = [k, ev.t_star, ev.local_index, ev.det_e_residual, ev.coincident]
        if query is not None:
            row.append(expected[k])
        table.add(*row)
    local_sum = sum(ev.local_index for ev in events)
    agree = local_sum == mu_total
    summary = Table("total", ("events", "local_sum", "mu_integral", "closed", "agree"))
    summary.add(len(events), local_sum, mu_total, closed, agree)
    result = Result([table, summary])
    if flagged:
        note(f"odd-order tangencies of det E at t = {', '.join(f'{t:.15g}' for t in flagged)}")
    if not agree:
        result.status = EXIT_TOLERANCE
        result.message = f"local sum {local_sum} differs from the Maslov-form integral {mu_total}"
    elif query is not None and any(ev.local_index != e for ev, e in zip(events, expected)):
        result.status = EXIT_TOLERANCE
        result.message = "a local index differs from sgn cos phi12"
    return result


def _asymptotic_or_none(args):
    q, flat_rel = args
    try:
        return sixj_asymptotic(q, flat_rel_tol=flat_rel), "allowed"
    except ForbiddenRegionError:
        return None, "forbidden"
    except CausticQueryError:
        return None, "flat"


def _map(fn, items, jobs: int):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
    return [fn(x) for x in items]


def cmd_sixj(query: SixJQuery, mode: str = "exact", sweep: bool = False,
             flat_rel: float = 1e-9, jobs: int = 1) -> Result:
    if not sweep:
        if not query.admissible:
            note(f"{query} violates a triangle or parity condition; the symbol is 0")
        cols = ["query"]
        row: List[Any] = [str(query)]
        exact = sixj_exact(query)
        approx = None
        if mode in ("exact", "compare"):
            cols.append("exact")
            row.append(exact)
        if mode in ("asymptotic", "compare"):
            if not query.admissible:
                approx = 0.0
            else:
                try:
                    approx = sixj_asymptotic(query, flat_rel_tol=flat_rel)
                except ForbiddenRegionError as exc:
                    t = Table("sixj", tuple(cols))
                    t.add(*row)
                    return Result([t] if mode == "compare" else [], EXIT_TOLERANCE,
                                  f"asymptotic formula not available: {exc}")
            cols.append("asymptotic")
            row.append(approx)
        if mode == "compare":
            cols += ["abs_error", "rel_error"]
            err = abs(approx - exact)
            row += [err, err / abs(exact) if exact else None]
        t = Table("sixj", tuple(cols))
        t.add(*row)
        return Result([t])

    lo = max(abs(query.j1 - query.j4), abs(query.j2 - query.j3))
    hi = min(query.j1 + query.j4, query.j2 + query.j3)
    j23s = []
    j = lo
    while j <= hi:
        j23s.append(Fraction(j))
        j += 1
    queries = [query.with_j23(x) for x in j23s]
    exact = [sixj_exact(q) for q in queries]
    if not queries or not any(q.admissible for q in queries):
        note(f"no admissible j23 for {query}; all symbols are 0")
    cols = ["j23"]
    if mode in ("exact", "compare"):
        cols.append("exact")
    approx: List[Tuple[Optional[float], str]] = []
    if mode in ("asymptotic", "compare"):
        approx = _map(_asymptotic_or_none, [(q, flat_rel) for q in queries], jobs)
        cols += ["asymptotic", "region"]
    if mode == "compare":
        cols += ["abs_error", "rel_error"]
    table = Table("sweep", tuple(cols))
    for k, q in enumerate(queries):
        row: List[Any] = [str(q.j23)]
        if mode in ("exact", "compare"):
            row.append(exact[k])
        if approx:
            a, region = approx[k]
            row += [a, region]
            if mode == "compare":
                err = None if a is None else abs(a - exact[k])
                rel = None if err is None or exact[k] == 0 else err / abs(exact[k])
                row += [err, rel]
        table.add(*row)
    tables = [table]
    if mode == "compare":
        idx = [k for k, (a, _) in enumerate(approx) if a is not None]
        ex = [exact[k] for k in idx]
        ap = [approx[k][0] for k in idx]
        summary = Table("summary", ("points", "allowed", "rms_rel_error_middle60",
                                    "nodes_exact", "nodes_asymptotic"))
        sl = middle_fraction(ex)
        rms = normalized_rms_error(ex[sl], ap[sl]) if ex[sl] else None
        summary.add(len(queries), len(idx), rms, node_count(ex), node_count(ap))
        tables.append(summary)
    return Result(tables)


def cmd_canonical_check(pf: ProblemFile, trials: Optional[int] = None) -> Result:
    if pf.kind != "canonical-check":
        raise ProblemFileError(f"{pf.source}: canonical-check needs kind = canonical-check, "
                               f"got {pf.kind}")
    trials = pf.get("trials") if trials is None else trials
    if trials < 0:
        raise InputError("trials must be >= 0")
    open_trials = min(pf.get("open_trials"), trials)
    energy, omega, mass = pf.get("energy"), pf.get("omega"), pf.get("mass")
    spec = harmonic_spec(energy, omega, mass)
    loop = harmonic_orbit(energy, omega, mass)
    opts = _detection_opts(pf)
    rng = np.random.default_rng(0 if pf.seed is None else pf.seed)
    scale = pf.get("scale")

    table = Table("trials", ("trial", "path", "mu", "mu_prime", "delta_mu", "delta_k", "pass"))
    closed_fail = open_fail = 0
    for k in range(trials):
        T = LinearCanonical.random(1, rng, scale=scale)
        r = verify_exactness(loop, spec, T, opts, closed=True, raise_on_failure=False)
        ok = r.balanced
        closed_fail += not ok
        table.add(k, "closed", r.integral.value, r.integral_prime.value, r.delta_mu, None, ok)
    period = 2 * math.pi / omega
    for k in range(open_trials):
        T = LinearCanonical.random(1, rng, scale=scale)
        for _attempt in range(20):
            a = rng.uniform(0.0, period)
            b = a + rng.uniform(0.1, 0.8) * period
            seg = CurveOnL(loop.point_at, (a, b), flow_index=0, label="open arc")
            try:
                r = verify_exactness(seg, spec, T, opts, closed=False, raise_on_failure=False)
                break
            except EndpointCausticError:
                continue
        else:
            raise NumericalError("could not draw an open arc with caustic-free endpoints")
        ok = r.balanced
        open_fail += not ok
        table.add(k, "open", r.integral.value, r.integral_prime.value, r.delta_mu, r.delta_k, ok)
    summary = Table("summary", ("closed_pass", "closed_fail", "open_pass", "open_fail"))
    summary.add(trials - closed_fail, closed_fail, open_trials - open_fail, open_fail)
    result = Result([table, summary])
    if closed_fail or open_fail:
        result.status = EXIT_TOLERANCE
        result.message = f"{closed_fail} closed and {open_fail} open trial(s) failed"
    return result


# ---------------------------------------------------------------------------
# argument handling


def _tol_pairs(items: Sequence[str]) -> Dict[str, float]:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise InputError(f"--tol expects NAME=VALUE, got {item!r}")
        name, value = item.split("=", 1)
        try:
            v = float(value)
        except ValueError:
            raise InputError(f"--tol {name}: not a number: {value!r}") from None
        if not (v > 0 and math.isfinite(v)):
            raise InputError(f"--tol {name} must be positive and finite")
        out[name.strip()] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "csv", "json-lines"), default="text")
    common.add_argument("--seed", type=int, default=None, help="overrides the file's seed")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help="tolerance override (repeatable)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    parser = argparse.ArgumentParser(prog="maslov", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bohr-sommerfeld", parents=[common], help="quantize a oneD problem")
    p.add_argument("file")
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--oracle", action="store_true", help="compare with the FD eigenvalues")

    p = sub.add_parser("maslov-curve", parents=[common], help="caustics and Maslov integral")
    p.add_argument("file")

    p = sub.add_parser("sixj", parents=[common], help="6j symbols")
    p.add_argument("j", nargs="*", metavar="J", help="j1 j2 j12 j3 j4 j23")
    p.add_argument("--file", default=None, help="kind = sixj problem file")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="mode", action="store_const", const="exact")
    mode.add_argument("--asymptotic", dest="mode", action="store_const", const="asymptotic")
    mode.add_argument("--compare", dest="mode", action="store_const", const="compare")
    p.add_argument("--sweep", action="store_true", help="sweep j23 over its admissible range")

    p = sub.add_parser("canonical-check", parents=[common], help="canonical invariance report")
    p.add_argument("file")
    p.add_argument("--trials", type=int, default=None)
    return parser


def _load(path: str, args) -> ProblemFile:
    pf = load_problem_file(path)
    return pf.with_overrides(_tol_pairs(args.tol), args.seed)


def run(args) -> Result:
    if args.jobs < 1:
        raise InputError("--jobs must be >= 1")
    if args.command == "bohr-sommerfeld":
        return cmd_bohr_sommerfeld(_load(args.file, args), args.n_max, args.oracle)
    if args.command == "maslov-curve":
        return cmd_maslov_curve(_load(args.file, args))
    if args.command == "canonical-check":
        return cmd_canonical_check(_load(args.file, args), args.trials)
    # sixj
    if args.file is not None:
        if args.j:
            raise InputError("give either the six j values or --file, not both")
        pf = _load(args.file, args)
        if pf.kind != "sixj":
            raise ProblemFileError(f"{pf.source}: sixj needs kind = sixj, got {pf.kind}")
        query = _query_from(pf)
        mode = args.mode or pf.get("mode")
        sweep = args.sweep or pf.get("sweep")
        flat_rel = pf.tol("flat_rel")
    else:
        if len(args.j) != 6:
            raise InputError(f"sixj needs six values j1 j2 j12 j3 j4 j23, got {len(args.j)}")
        query = SixJQuery(*args.j)
        mode = args.mode or "exact"
        sweep = args.sweep
        tols = _tol_pairs(args.tol)
        bad = set(tols) - {"flat_rel"}
        if bad:
            raise InputError(f"unknown tolerance(s) for sixj: {', '.join(sorted(bad))}")
        flat_rel = tols.get("flat_rel", 1e-9)
    return cmd_sixj(query, mode, sweep, flat_rel, args.jobs)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        result = run(args)
    except (InputError, UnsupportedError, ForbiddenRegionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MaslovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    sys.stdout.write(render(result.tables, args.format))
    sys.stdout.flush()
    if result.message:
        print(("tolerance failure: " if result.status == EXIT_TOLERANCE else "") + result.message,
              file=sys.stderr)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
