"""In-plane Bloch band structure of the square phononic lattice."""

from .fem import SingularElementError, assemble_plane_stress, plane_stress_matrix
from .mesh import REFERENCE_CELL, Mesh, UnitCell, build_unit_cell_mesh
from .solver import (
    BandSolveError,
    BandStructure,
    BlochProblem,
    find_gap,
    high_symmetry_path,
    solve_bands,
)

__all__ = [
    "REFERENCE_CELL",
    "BandSolveError",
    "BandStructure",
    "BlochProblem",
    "Mesh",
    "SingularElementError",
    "UnitCell",
    "assemble_plane_stress",
    "build_unit_cell_mesh",
    "find_gap",
    "high_symmetry_path",
    "plane_stress_matrix",
    "solve_bands",
]
