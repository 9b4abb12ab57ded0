"""
Interface-fitted P1 finite elements on patch-hierarchical triangulations.

A macro triangulation of the unit square is refined once; the midpoints of
macro patches cut by a level-set interface are moved so the interface becomes
a chain of element edges without changing the number of unknowns.
"""
from .analysis import (ManufacturedProblem, convergence_study, error_norms, radial_manufactured,
                       solve)
from .assembly import MaterialCoefficients, ProblemSpec, assemble
from .conditioning import compute_scaling, condition_study, verify_eq4
from .fitting import FittedMesh, fit_mesh, reference_patch_sweep, verify_angles
from .interface import AssumptionViolated, Affine, Circle, classify_patch, parse_interface
from .mesh import PatchMesh, build_macro_mesh, build_patch_mesh, refine

__all__ = [
    "Affine", "AssumptionViolated", "Circle", "FittedMesh", "ManufacturedProblem",
    "MaterialCoefficients", "PatchMesh", "ProblemSpec", "assemble", "build_macro_mesh",
    "build_patch_mesh", "classify_patch", "compute_scaling", "condition_study",
    "convergence_study", "error_norms", "fit_mesh", "parse_interface", "radial_manufactured",
    "reference_patch_sweep", "refine", "solve", "verify_angles", "verify_eq4",
]
__version__ = "0.1.0"
