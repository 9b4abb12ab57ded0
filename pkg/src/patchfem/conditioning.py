"""
Hierarchical node splitting, diagonal basis scaling, and condition numbers.

Nodes of the fine mesh split into macro nodes (indices below ``n_macro``) and
bubble nodes (the refinement midpoints).  The scaling multiplies every basis
function by ``d_i = L_ii ** -1/2`` with ``L`` the unit-coefficient stiffness
matrix, so each scaled function has unit energy.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .assembly import ProblemSpec, SparseSystem, assemble, assemble_matrix
from .fitting import FittedMesh, fit_mesh
from .geometry import signed_areas
from .interface import SNAP_TOL, Circle
from .linalg import SymmetricSparse, extreme_eigs
from .mesh import build_patch_mesh, mesh_size

log = logging.getLogger(__name__)

CONDITION_HEADER = "level,n,h,radius_offset,scaled,lambda_min,lambda_max,cond2"
SLIVER_OFFSETS = (1e-1, 1e-3, 1e-6)


@dataclass(frozen=True)
class HierarchicalSplit:
    macro: np.ndarray
    bubble: np.ndarray

    @property
    def n_macro(self) -> int:
        return len(self.macro)

    @property
    def n_bubble(self) -> int:
        return len(self.bubble)


@dataclass(frozen=True)
class BasisScaling:
    d: np.ndarray

    def __post_init__(self):
        if np.any(~(self.d > 0)):
            raise ValueError("scaling factors must be positive")


def split_nodes(f: FittedMesh) -> HierarchicalSplit:
    n = f.n_vertices
    m = f.mesh.n_macro
    return HierarchicalSplit(np.arange(m), np.arange(m, n))


def unit_stiffness(f: FittedMesh) -> SymmetricSparse:
    return SymmetricSparse(assemble_matrix(f.vertices, f.elements, 1.0))


def compute_scaling(f: FittedMesh) -> BasisScaling:
    diag = unit_stiffness(f).diagonal()
    if np.any(diag <= 0):
        raise ValueError("non-positive stiffness diagonal (degenerate mesh)")
    return BasisScaling(diag ** -0.5)


def scaled_system(system: SparseSystem, sc: BasisScaling) -> SparseSystem:
    """Congruence ``D A D``, ``D b``; Dirichlet values move to scaled coordinates.

    A solution ``x_hat`` of the result maps back through :func:`unscale`.
    """
    d = np.asarray(sc.d)
    if d.shape != (system.n,):
        raise ValueError(f"dimension mismatch: system {system.n}, scaling {d.shape}")
    nodes = system.dirichlet_nodes
    return SparseSystem(system.matrix.congruence(d), d * system.rhs, nodes,
                        system.dirichlet_values / d[nodes])


def unscale(x_hat: np.ndarray, sc: BasisScaling) -> np.ndarray:
    return sc.d * x_hat


# ---- condition study ----------------------------------------------------------

@dataclass(frozen=True)
class ConditionRow:
    level: int
    n: int
    h: float
    radius_offset: float
    scaled: bool
    lambda_min: float
    lambda_max: float

    @property
    def cond2(self) -> float:
        return self.lambda_max / self.lambda_min

    def csv(self) -> str:
        return (f"{self.level},{self.n},{self.h:.10g},{self.radius_offset:.6g},{int(self.scaled)},"
                f"{self.lambda_min:.10g},{self.lambda_max:.10g},{self.cond2:.10g}")


def reduced_operator(f: FittedMesh, problem: ProblemSpec, with_scaling: bool) -> SymmetricSparse:
    system = assemble(f, problem)
    if with_scaling:
        system = scaled_system(system, compute_scaling(f))
    return system.reduced()[0]


def _grow_radius(problem: ProblemSpec, delta: float) -> ProblemSpec:
    c = problem.interface
    if not isinstance(c, Circle):
        raise ValueError("radius sweeps need a circular interface")
    return ProblemSpec(problem.coefficients, problem.source, problem.dirichlet,
                       Circle(c.center, c.radius + delta))


def condition_row(problem: ProblemSpec, n: int, level: int, with_scaling: bool,
                  radius_offset: float = 0.0, snap_tol: float = SNAP_TOL,
                  tol: float = 1e-8) -> ConditionRow:
    mesh = build_patch_mesh(n)
    h = mesh_size(mesh)
    if radius_offset:
        problem = _grow_radius(problem, radius_offset * h)
    f = fit_mesh(mesh, problem.interface, snap_tol)
    lo, hi = extreme_eigs(reduced_operator(f, problem, with_scaling), tol)
    return ConditionRow(level, n, h, radius_offset, with_scaling, lo, hi)


def condition_study(problem: ProblemSpec, n0: int = 4, levels: int = 4, with_scaling: bool = True,
                    sliver_sweep: bool = False, sliver_n: int | None = None,
                    tol: float = 1e-8) -> list[ConditionRow]:
    """cond2 of the reduced operator on ``n = n0 * 2**k``, optionally a sliver sweep.

    The sweep shifts the circle radius by ``q * h`` for ``q`` in
    :data:`SLIVER_OFFSETS` at ``n = sliver_n`` (default ``n0``) and is
    reported with ``level = -1``.
    """
    if levels < 2:
        raise ValueError("condition study needs at least two levels")
    rows = [condition_row(problem, n0 * 2**k, k, with_scaling, tol=tol) for k in range(levels)]
    if sliver_sweep:
        n = sliver_n or n0
        for q in SLIVER_OFFSETS:
            rows.append(condition_row(problem, n, -1, with_scaling, radius_offset=q, tol=tol))
    return rows


# ---- sampled local stability of the bubble coefficients --------------------------

def _local_mass(pts: np.ndarray) -> np.ndarray:
    area = np.abs(signed_areas(pts))
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return area[:, None, None] * base


def _node_neighbourhoods(f: FittedMesh):
    E = f.elements
    elems_of = [[] for _ in range(f.n_vertices)]
    for k, tri in enumerate(E):
        for v in tri:
            elems_of[v].append(k)
    patch_of = np.empty(len(E), dtype=np.int64)
    patch_of[f.mesh.children.ravel()] = np.repeat(np.arange(f.mesh.n_patches), 4)
    return elems_of, patch_of


def eq4_ratio(f: FittedMesh, sc: BasisScaling, node: int, coeffs: dict[int, float],
              normalize: bool = True) -> float:
    """``|c_node| / |v_b|_{L2(N_node)}`` for ``v_b = sum c_j d_j phi_j``.

    ``N_node`` is the set of elements touching ``node``.  With ``normalize``
    the norm is divided by ``sqrt(|N_node|)`` so the ratio is dimensionless.
    """
    elems_of, _ = _node_neighbourhoods(f)
    return _ratio(f, sc, node, elems_of[node], coeffs, normalize)


def _ratio(f, sc, node, elems, coeffs, normalize):
    E = f.elements[elems]
    M = _local_mass(f.vertices[E])
    c = np.array([[coeffs.get(int(v), 0.0) * sc.d[v] for v in tri] for tri in E])
    sq = float(np.einsum("ki,kij,kj->", c, M, c))
    if normalize:
        sq /= float(M.sum())
    return abs(coeffs.get(node, 0.0)) / np.sqrt(sq)


def verify_eq4(f: FittedMesh, sc: BasisScaling, samples: int = 8, seed: int = 0,
               normalize: bool = True) -> float:
    """Largest sampled ratio of a bubble coefficient to the local L2 norm.

    For every bubble node ``i`` random coefficient vectors are drawn on the
    bubble nodes of the patches meeting ``N_i``; the single-function vector
    ``e_i`` is always included.  See :func:`eq4_ratio` for ``normalize``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    elems_of, patch_of = _node_neighbourhoods(f)
    split = split_nodes(f)
    worst = 0.0
    for i in split.bubble:
        elems = elems_of[i]
        patches = np.unique(patch_of[elems])
        support = np.unique(f.mesh.midpoints[patches])
        vectors = [{int(i): 1.0}]
        for _ in range(samples):
            vals = rng.standard_normal(len(support))
            vectors.append(dict(zip(support.tolist(), vals.tolist())))
        for coeffs in vectors:
            worst = max(worst, _ratio(f, sc, int(i), elems, coeffs, normalize))
    return worst
