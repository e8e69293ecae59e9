"""The Wigner 6j symbol: exact values, tetrahedron geometry, and asymptotics."""

from .geometry import Tetrahedron, tetrahedron_from_dihedral, tetrahedron_from_lengths
from .racah import SixJQuery, orthogonality_sum, sixj_exact, sixj_recursion
from .semiclassical import sixj_asymptotic, sixj_maslov_index

__all__ = [
    "SixJQuery",
    "Tetrahedron",
    "orthogonality_sum",
    "sixj_asymptotic",
    "sixj_exact",
    "sixj_maslov_index",
    "sixj_recursion",
    "tetrahedron_from_dihedral",
    "tetrahedron_from_lengths",
]
