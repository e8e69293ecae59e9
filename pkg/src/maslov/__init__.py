"""Maslov indices from Poisson brackets, with semiclassical applications.

The core objects are a Lagrangian manifold given by commuting observables
(``LagrangianSpec``), curves on it (``CurveOnL``), caustic detection with
local indices, and the singular Maslov form whose integral gives the global
index. On top of these sit Bohr-Sommerfeld quantization, linear canonical
changes of representation, and the 6j symbol.
"""

from .caustics import (
    CausticEvent,
    CurveOnL,
    DetectionOpts,
    coincident_caustic_checks,
    detect_caustics,
    local_maslov_index,
    signature_jump_oracle,
)
from .canonical import LinearCanonical, k_generator, verify_exactness
from .errors import InputError, MaslovError, NumericalError
from .maslov_form import MaslovIntegral, deform_and_recheck, integrate_maslov_form
from .quantize import OneDProblem, bohr_sommerfeld_levels, schrodinger_fd_eigenvalues
from .symplectic import (
    LagrangianSpec,
    Observable,
    PhasePoint,
    ProjectionJacobians,
    poisson_bracket,
    projection_jacobians,
)

__version__ = "0.1.0"

__all__ = [
    "CausticEvent",
    "CurveOnL",
    "DetectionOpts",
    "InputError",
    "LagrangianSpec",
    "LinearCanonical",
    "MaslovError",
    "MaslovIntegral",
    "NumericalError",
    "Observable",
    "OneDProblem",
    "PhasePoint",
    "ProjectionJacobians",
    "bohr_sommerfeld_levels",
    "coincident_caustic_checks",
    "deform_and_recheck",
    "detect_caustics",
    "integrate_maslov_form",
    "k_generator",
    "local_maslov_index",
    "poisson_bracket",
    "projection_jacobians",
    "schrodinger_fd_eigenvalues",
    "signature_jump_oracle",
    "verify_exactness",
]
