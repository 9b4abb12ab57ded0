"""
Manufactured transmission problems, error norms, and convergence studies.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import MaterialCoefficients, ProblemSpec, _gradients, assemble
from .conditioning import compute_scaling, scaled_system, unscale
from .fitting import FittedMesh, fit_mesh, unfitted, verify_angles
from .interface import SNAP_TOL, Affine, Circle, LevelSetInterface
from .linalg import CGResult, cg_solve
from .mesh import build_patch_mesh, mesh_size

log = logging.getLogger(__name__)

CONVERGENCE_HEADER = "nverts,h,l2_error,l2_rate,h1_error,h1_rate,max_angle_deg"

# Dunavant degree-4 rule: barycentric points and weights (weights sum to 1)
_A, _B = 0.445948490915965, 0.091576213509771
_WA, _WB = 0.223381589678011, 0.109951743655322
QUAD_POINTS = np.array([
    [_A, _A, 1 - 2 * _A], [_A, 1 - 2 * _A, _A], [1 - 2 * _A, _A, _A],
    [_B, _B, 1 - 2 * _B], [_B, 1 - 2 * _B, _B], [1 - 2 * _B, _B, _B],
])
QUAD_WEIGHTS = np.array([_WA] * 3 + [_WB] * 3)


@dataclass(frozen=True)
class ManufacturedProblem:
    spec: ProblemSpec
    exact: Callable[[np.ndarray, np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def radial_manufactured(kappa1: float = 1.0, kappa2: float = 10.0, radius: float = 0.5,
                        center=(0.0, 0.0)) -> ManufacturedProblem:
    """``u = r^2 / kappa_i`` (plus a constant inside) for a circular interface.

    The constant ``radius^2 (1/kappa2 - 1/kappa1)`` makes ``u`` continuous and
    ``kappa du/dr = 2 r`` is continuous for free; ``f = -4`` on both sides.
    """
    if not 0 < radius < 1:
        raise ValueError("radius must lie in (0, 1)")
    coeffs = MaterialCoefficients(kappa1, kappa2)
    phi = Circle(tuple(center), radius)
    shift = radius**2 * (1.0 / kappa2 - 1.0 / kappa1)
    cx, cy = center

    def inside(x, y):
        return np.asarray(phi(x, y)) < 0

    def exact(x, y):
        r2 = (x - cx) ** 2 + (y - cy) ** 2
        return np.where(inside(x, y), r2 / kappa1 + shift, r2 / kappa2)

    def gradient(x, y):
        k = np.where(inside(x, y), kappa1, kappa2)
        return 2.0 * (x - cx) / k, 2.0 * (y - cy) / k

    spec = ProblemSpec(coeffs, lambda x, y: np.full(np.shape(x), -4.0), exact, phi)
    return ManufacturedProblem(spec, exact, gradient)


def affine_manufactured(kappa1: float, kappa2: float, normal=(1.0, 0.0),
                        offset: float = 0.5) -> ManufacturedProblem:
    """Piecewise linear ``u = phi / kappa_i`` across a straight interface, ``f = 0``."""
    coeffs = MaterialCoefficients(kappa1, kappa2)
    phi = Affine(tuple(normal), offset)

    def exact(x, y):
        v = np.asarray(phi(x, y))
        return np.where(v < 0, v / kappa1, v / kappa2)

    def gradient(x, y):
        k = np.where(np.asarray(phi(x, y)) < 0, kappa1, kappa2)
        return normal[0] / k, normal[1] / k

    spec = ProblemSpec(coeffs, lambda x, y: np.zeros(np.shape(x)), exact, phi)
    return ManufacturedProblem(spec, exact, gradient)


def error_norms(f: FittedMesh, uh: np.ndarray, mp: ManufacturedProblem,
                subdivisions: int = 0) -> tuple[float, float]:
    """L2 error and H1-seminorm error of a P1 field ``uh`` on ``f``.

    The exact solution is evaluated on the side given by the true level set at
    each quadrature point.  ``subdivisions > 0`` applies the 6-point rule on
    ``4**subdivisions`` congruent subtriangles of every element.
    """
    uh = np.asarray(uh, dtype=float)
    if uh.shape != (f.n_vertices,):
        raise ValueError("solution does not match the mesh")
    pts = f.vertices[f.elements]
    g, area = _gradients(pts)
    coef = uh[f.elements]
    grad_h = np.einsum("mi,mid->md", coef, g)
    bary, w = _composite_rule(subdivisions)
    xq = np.einsum("qi,mid->mqd", bary, pts)
    uq = np.einsum("qi,mi->mq", bary, coef)
    ue = mp.exact(xq[..., 0], xq[..., 1])
    gx, gy = mp.gradient(xq[..., 0], xq[..., 1])
    gx = np.broadcast_to(gx, ue.shape)
    gy = np.broadcast_to(gy, ue.shape)
    l2 = np.sum(area[:, None] * w * (ue - uq) ** 2)
    h1 = np.sum(area[:, None] * w * ((gx - grad_h[:, None, 0]) ** 2 + (gy - grad_h[:, None, 1]) ** 2))
    return math.sqrt(l2), math.sqrt(h1)


def _composite_rule(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric points/weights of the 6-point rule on a uniform subdivision."""
    tris = [np.eye(3)]
    for _ in range(level):
        nxt = []
        for t in tris:
            a, b, c = t
            ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
            nxt += [np.array([a, ab, ca]), np.array([ab, b, bc]), np.array([ca, bc, c]),
                    np.array([ab, bc, ca])]
        tris = nxt
    pts = np.concatenate([QUAD_POINTS @ t for t in tris])
    w = np.tile(QUAD_WEIGHTS, len(tris)) / len(tris)
    return pts, w


def nodal_interpolant(f: FittedMesh, u: Callable) -> np.ndarray:
    X = f.vertices
    return np.asarray(u(X[:, 0], X[:, 1]), dtype=float)


@dataclass(frozen=True)
class Solution:
    values: np.ndarray
    cg: CGResult


def solve(f: FittedMesh, spec: ProblemSpec, scaling: bool = True, rel_tol: float = 1e-12,
          max_iter: int | None = None) -> Solution:
    """Assemble, optionally scale, and solve with CG; returns nodal values."""
    system = assemble(f, spec)
    sc = compute_scaling(f) if scaling else None
    if sc is not None:
        system = scaled_system(system, sc)
    A, b = system.reduced()
    res = cg_solve(A, b, rel_tol=rel_tol, max_iter=max_iter)
    x = system.expand(res.x)
    if sc is not None:
        x = unscale(x, sc)
    return Solution(x, res)


@dataclass(frozen=True)
class ConvergenceRow:
    nverts: int
    h: float
    l2_error: float
    l2_rate: float | None
    h1_error: float
    h1_rate: float | None
    max_angle: float

    def csv(self) -> str:
        def rate(v):
            return "" if v is None else f"{v:.4f}"
        return (f"{self.nverts},{self.h:.6g},{self.l2_error:.6e},{rate(self.l2_rate)},"
                f"{self.h1_error:.6e},{rate(self.h1_rate)},{self.max_angle:.3f}")


class StudyError(RuntimeError):
    pass


def convergence_study(mp: ManufacturedProblem, n0: int = 4, levels: int = 6, fitted: bool = True,
                      scaling: bool = True, snap_tol: float = SNAP_TOL,
                      rel_tol: float = 1e-12, subdivisions: int = 0) -> list[ConvergenceRow]:
    """Errors on ``n = n0 * 2**k`` macro meshes, ``k = 0 .. levels-1``.

    ``fitted=False`` runs the same pipeline without moving nodes (elements
    tagged by centroid sign) for comparison.
    """
    if levels < 2:
        raise ValueError("convergence study needs at least two levels")
    rows: list[ConvergenceRow] = []
    for k in range(levels):
        n = n0 * 2**k
        try:
            mesh = build_patch_mesh(n)
            f = fit_mesh(mesh, mp.spec.interface, snap_tol) if fitted else unfitted(mesh, mp.spec.interface)
            sol = solve(f, mp.spec, scaling=scaling, rel_tol=rel_tol)
            l2, h1 = error_norms(f, sol.values, mp, subdivisions)
            ang, _ = verify_angles(f)
        except Exception as exc:
            raise StudyError(f"level {k} (n={n}): {exc}") from exc
        prev = rows[-1] if rows else None
        rows.append(ConvergenceRow(
            nverts=f.n_vertices, h=mesh_size(f.mesh), l2_error=l2,
            l2_rate=None if prev is None else math.log2(prev.l2_error / l2),
            h1_error=h1, h1_rate=None if prev is None else math.log2(prev.h1_error / h1),
            max_angle=ang))
        log.info("level %d: n=%d l2=%.3e h1=%.3e angle=%.2f cg=%d", k, n, l2, h1, ang,
                 sol.cg.iterations)
    return rows


def problem_for_interface(phi: LevelSetInterface, kappa1: float, kappa2: float) -> ManufacturedProblem:
    """Manufactured problem matching a parsed interface."""
    if isinstance(phi, Circle):
        return radial_manufactured(kappa1, kappa2, phi.radius, phi.center)
    if isinstance(phi, Affine):
        return affine_manufactured(kappa1, kappa2, phi.normal, phi.offset)
    raise ValueError(f"no manufactured solution for {phi!r}")
