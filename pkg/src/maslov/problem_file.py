"""Flat ``key = value`` problem files with strict, kind-specific schemas.

Example::

    # harmonic oscillator
    kind = oneD
    potential = harmonic
    omega = 1.0
    n_max = 5
    tol.rtol = 1e-12

Blank lines and ``#`` comments are ignored. Every key must belong to the
schema of the declared ``kind`` (or be a ``tol.*`` override of that kind);
duplicate and unknown keys are errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union

from .errors import ProblemFileError

KINDS = ("oneD", "sixj", "curve", "canonical-check")


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float_list(text: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}; got {text!r}")
        return text

    return parse


def _finite(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"not finite: {text!r}")
    return v


# key -> (parser, default); ``None`` defaults mean "not set"
_SCHEMAS: Dict[str, Dict[str, Tuple[Callable[[str], Any], Any]]] = {
    "oneD": {
        "potential": (_choice("harmonic", "quartic", "polynomial"), "harmonic"),
        "mass": (_finite, 1.0),
        "hbar": (_finite, 1.0),
        "omega": (_finite, 1.0),
        "coeff": (_finite, 1.0),
        "coeffs": (_float_list, None),
        "x_min": (_finite, -10.0),
        "x_max": (_finite, 10.0),
        "n_max": (int, 10),
        "fd_points": (int, 2000),
        "oracle_min_n": (int, 0),
    },
    "curve": {
        "system": (_choice("harmonic", "sixj-orbit", "torus", "phase-locked"), None),
        "energy": (_finite, 0.5),
        "omega": (_finite, 1.0),
        "mass": (_finite, 1.0),
        "t_start": (_finite, None),
        "t_end": (_finite, None),
        "a1": (_finite, 1.0),
        "a2": (_finite, 1.5),
        "winding1": (int, 1),
        "winding2": (int, 0),
        "offset": (_finite, -0.5 * math.pi),
        "j1": (str, None),
        "j2": (str, None),
        "j12": (str, None),
        "j3": (str, None),
        "j4": (str, None),
        "j23": (str, None),
    },
    "sixj": {
        "j1": (str, None),
        "j2": (str, None),
        "j12": (str, None),
        "j3": (str, None),
        "j4": (str, None),
        "j23": (str, None),
        "mode": (_choice("exact", "asymptotic", "compare"), "exact"),
        "sweep": (_bool, False),
    },
    "canonical-check": {
        "system": (_choice("harmonic"), "harmonic"),
        "energy": (_finite, 0.5),
        "omega": (_finite, 1.0),
        "mass": (_finite, 1.0),
        "trials": (int, 100),
        "open_trials": (int, 20),
        "scale": (_finite, 1.0),
    },
}

# tolerance overrides accepted as ``tol.<name>``
TOLERANCE_KEYS: Dict[str, Tuple[str, ...]] = {
    "oneD": ("rtol", "oracle_rel", "kernel_tol", "t_tol"),
    "curve": ("kernel_tol", "t_tol", "touch_tol"),
    "sixj": ("flat_rel",),
    "canonical-check": ("kernel_tol", "t_tol"),
}

DEFAULT_TOLERANCES: Dict[str, float] = {
    "rtol": 1e-12,
    "oracle_rel": 0.02,
    "kernel_tol": 1e-6,
    "t_tol": 1e-10,
    "touch_tol": 1e-8,
    "flat_rel": 1e-9,
}


@dataclass(frozen=True)
class ProblemFile:
    kind: str
    parameters: Mapping[str, Any]
    tolerances: Mapping[str, float] = field(default_factory=dict)
    seed: Optional[int] = None
    source: str = "<string>"

    def get(self, key: str) -> Any:
        return self.parameters[key]

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def require(self, *keys: str) -> None:
        missing = [k for k in keys if self.parameters.get(k) is None]
        if missing:
            raise ProblemFileError(f"{self.source}: missing required key(s) {', '.join(missing)}")

    def with_overrides(self, tolerances: Mapping[str, float] = {},
                       seed: Optional[int] = None) -> "ProblemFile":
        bad = [k for k in tolerances if k not in TOLERANCE_KEYS[self.kind]]
        if bad:
            raise ProblemFileError(
                f"unknown tolerance(s) for kind {self.kind}: {', '.join(sorted(bad))}"
            )
        merged = dict(self.tolerances)
        merged.update(tolerances)
        return ProblemFile(self.kind, self.parameters, merged,
                           self.seed if seed is None else seed, self.source)


def parse_problem_text(text: str, source: str = "<string>") -> ProblemFile:
    """Parse problem-file text; raises ``ProblemFileError`` with a line number."""
    raw: Dict[str, Tuple[int, str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ProblemFileError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (s.strip() for s in stripped.split("=", 1))
        if not key or not value:
            raise ProblemFileError(f"{source}:{lineno}: empty key or value")
        if key in raw:
            raise ProblemFileError(f"{source}:{lineno}: duplicate key {key!r} "
                                   f"(first set on line {raw[key][0]})")
        raw[key] = (lineno, value)

    if "kind" not in raw:
        raise ProblemFileError(f"{source}: missing 'kind' (one of {', '.join(KINDS)})")
    kind = raw.pop("kind")[1]
    if kind not in KINDS:
        raise ProblemFileError(f"{source}: unknown kind {kind!r} (one of {', '.join(KINDS)})")
    schema = _SCHEMAS[kind]

    seed = None
    if "seed" in raw:
        lineno, value = raw.pop("seed")
        try:
            seed = int(value)
        except ValueError:
            raise ProblemFileError(f"{source}:{lineno}: seed must be an integer") from None

    params = {k: default for k, (_, default) in schema.items()}
    tolerances: Dict[str, float] = {}
    for key, (lineno, value) in raw.items():
        if key.startswith("tol."):
            name = key[4:]
            if name not in TOLERANCE_KEYS[kind]:
                raise ProblemFileError(f"{source}:{lineno}: unknown tolerance {key!r} for kind {kind}")
            try:
                tol = _finite(value)
            except ValueError as exc:
                raise ProblemFileError(f"{source}:{lineno}: {key}: {exc}") from None
            if tol <= 0:
                raise ProblemFileError(f"{source}:{lineno}: {key} must be positive")
            tolerances[name] = tol
            continue
        if key not in schema:
            raise ProblemFileError(f"{source}:{lineno}: unknown key {key!r} for kind {kind}")
        parser = schema[key][0]
        try:
            params[key] = parser(value)
        except ValueError as exc:
            raise ProblemFileError(f"{source}:{lineno}: {key}: {exc}") from None
    return ProblemFile(kind, params, tolerances, seed, source)


def load_problem_file(path: Union[str, Path]) -> ProblemFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror}") from None
    return parse_problem_text(text, str(path))
