"""
P1 Galerkin assembly for ``-div(kappa grad u) = f`` with Dirichlet data.

Each element carries the coefficient of its subdomain tag.  Dirichlet nodes
are eliminated symmetrically: their columns move to the right-hand side.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .geometry import DegenerateGeometryError, is_degenerate, signed_areas
from .interface import LevelSetInterface
from .linalg import SymmetricSparse

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class MaterialCoefficients:
    kappa1: float
    kappa2: float

    def __post_init__(self):
        if not (self.kappa1 > 0 and self.kappa2 > 0):
            raise ValueError("material coefficients must be positive")

    def for_tags(self, tags: np.ndarray) -> np.ndarray:
        tags = np.asarray(tags)
        if not np.all((tags == 1) | (tags == 2)):
            raise ValueError("untagged element (tags must be 1 or 2)")
        return np.where(tags == 1, self.kappa1, self.kappa2)


@dataclass(frozen=True)
class ProblemSpec:
    coefficients: MaterialCoefficients
    source: ScalarField
    dirichlet: ScalarField
    interface: LevelSetInterface


def _gradients(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric gradients ``(M, 3, 2)`` and areas ``(M,)``."""
    area = signed_areas(pts)
    x, y = pts[..., 0], pts[..., 1]
    g = np.empty(pts.shape)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        g[..., i, 0] = y[..., j] - y[..., k]
        g[..., i, 1] = x[..., k] - x[..., j]
    g /= (2.0 * area)[..., None, None]
    return g, area


def stiffness_batch(pts: np.ndarray, kappa) -> np.ndarray:
    """Element stiffness matrices ``(M, 3, 3)`` for triangles ``(M, 3, 2)``."""
    g, area = _gradients(pts)
    return np.asarray(kappa)[..., None, None] * area[..., None, None] * (g @ np.swapaxes(g, -1, -2))


def load_batch(pts: np.ndarray, f: ScalarField) -> np.ndarray:
    """Edge-midpoint rule for ``int_T f phi_i``, shape ``(M, 3)``."""
    area = signed_areas(pts)
    out = np.zeros(pts.shape[:-1])
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        mij = 0.5 * (pts[..., i, :] + pts[..., j, :])
        mik = 0.5 * (pts[..., i, :] + pts[..., k, :])
        out[..., i] = (np.asarray(f(mij[..., 0], mij[..., 1]))
                       + np.asarray(f(mik[..., 0], mik[..., 1])))
    return out * (area / 6.0)[..., None]


def element_stiffness(t, kappa: float = 1.0) -> np.ndarray:
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    pts = np.asarray(t, dtype=float)
    if is_degenerate(pts):
        raise DegenerateGeometryError("degenerate triangle")
    return stiffness_batch(pts[None], kappa)[0]


def element_load(t, f: ScalarField) -> np.ndarray:
    pts = np.asarray(t, dtype=float)
    return load_batch(pts[None], lambda x, y: np.broadcast_to(f(x, y), np.shape(x)))[0]


def assemble_matrix(vertices: np.ndarray, elements: np.ndarray, kappa) -> sp.csr_array:
    pts = vertices[elements]
    if np.any(signed_areas(pts) <= 0):
        raise DegenerateGeometryError("element with non-positive area")
    K = stiffness_batch(pts, np.broadcast_to(kappa, (len(elements),)))
    rows = np.repeat(elements, 3, axis=1).ravel()
    cols = np.tile(elements, (1, 3)).ravel()
    n = len(vertices)
    return sp.coo_array((K.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_vector(vertices: np.ndarray, elements: np.ndarray, f: ScalarField) -> np.ndarray:
    F = load_batch(vertices[elements], lambda x, y: np.broadcast_to(f(x, y), np.shape(x)))
    return np.bincount(elements.ravel(), weights=F.ravel(), minlength=len(vertices))


@dataclass
class SparseSystem:
    """Global operator and load before constraints, with the Dirichlet data.

    ``free`` lists the unconstrained node indices in increasing order.
    """

    matrix: SymmetricSparse
    rhs: np.ndarray
    dirichlet_nodes: np.ndarray
    dirichlet_values: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.n

    @property
    def free(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.dirichlet_nodes] = False
        return np.flatnonzero(mask)

    def reduced(self) -> tuple[SymmetricSparse, np.ndarray]:
        """Operator on the free nodes and the lifted right-hand side."""
        free = self.free
        A = self.matrix.csr
        b = self.rhs[free] - A[free][:, self.dirichlet_nodes] @ self.dirichlet_values
        return self.matrix.submatrix(free), b

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        x = np.zeros(self.n)
        x[self.free] = x_free
        x[self.dirichlet_nodes] = self.dirichlet_values
        return x


def assemble(fitted, spec: ProblemSpec) -> SparseSystem:
    """Assemble the transmission problem on a fitted (or plain tagged) mesh."""
    X, E = fitted.vertices, fitted.elements
    kappa = spec.coefficients.for_tags(fitted.tags)
    A = SymmetricSparse(assemble_matrix(X, E, kappa))
    b = assemble_vector(X, E, spec.source)
    nodes = np.flatnonzero(fitted.mesh.boundary)
    values = np.asarray(spec.dirichlet(X[nodes, 0], X[nodes, 1]), dtype=float)
    return SparseSystem(A, b, nodes, np.broadcast_to(values, nodes.shape).copy())


def write_matrix(path, A: SymmetricSparse) -> None:
    """Coordinate text export, one ``row col value`` triple per line."""
    coo = A.csr.tocoo()
    lines = [f"{i} {j} {v:.17g}" for i, j, v in zip(coo.row, coo.col, coo.data)]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
