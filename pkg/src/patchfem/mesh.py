"""
Two-level triangulations of the unit square.

A :class:`MacroMesh` is the coarse triangulation; :func:`refine` splits every
macro triangle into four children through its edge midpoints and records the
patch hierarchy in a :class:`PatchMesh`.

Local patch numbering follows the corner order of the macro triangle
``(c0, c1, c2)`` (counter-clockwise).  The midpoints are stored as
``(m01, m12, m20)`` and the children as::

    T1 = (c0, m01, m20)   T2 = (m01, c1, m12)
    T3 = (m20, m12, c2)   T4 = (m01, m12, m20)

Macro vertices keep their indices ``0 .. V-1``; the midpoint of macro edge
``e`` gets index ``V + e``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import signed_areas

_BOUNDARY_TOL = 1e-12


class MeshError(ValueError):
    """Raised for invalid or nonconforming meshes."""


def _on_square_boundary(xy: np.ndarray) -> np.ndarray:
    x, y = xy[..., 0], xy[..., 1]
    return ((np.abs(x) < _BOUNDARY_TOL) | (np.abs(x - 1.0) < _BOUNDARY_TOL)
            | (np.abs(y) < _BOUNDARY_TOL) | (np.abs(y - 1.0) < _BOUNDARY_TOL))


@dataclass(frozen=True)
class MacroMesh:
    vertices: np.ndarray    # (V, 2)
    triangles: np.ndarray   # (T, 3), counter-clockwise
    boundary: np.ndarray    # (V,) bool

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)


@dataclass(frozen=True)
class PatchMesh:
    """Uniform refinement of a macro mesh with its patch bookkeeping.

    Attributes
    ----------
    vertices : (N, 2) float array
        Macro vertices first, then one midpoint per macro edge.
    elements : (M, 3) int array
        Fine triangles, ``M = 4 * n_patches``.
    corners, midpoints : (P, 3) int arrays
        Per patch, the macro corners ``(c0, c1, c2)`` and the midpoints
        ``(m01, m12, m20)``.
    children : (P, 4) int array
        Element indices of ``T1 .. T4``.
    edges : (E, 2) int array
        Macro edges as sorted vertex pairs.
    patch_edges : (P, 3) int array
        Macro edge index of local edge ``k`` (from ``c_k`` to ``c_{k+1}``).
    edge_ends : (N, 2) int array
        For a midpoint, the macro edge endpoints it may move between;
        ``(-1, -1)`` for macro vertices.
    boundary : (N,) bool array
    """

    vertices: np.ndarray
    elements: np.ndarray
    corners: np.ndarray
    midpoints: np.ndarray
    children: np.ndarray
    edges: np.ndarray
    patch_edges: np.ndarray
    edge_ends: np.ndarray
    boundary: np.ndarray
    n_macro: int

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_patches(self) -> int:
        return len(self.corners)

    def element_points(self) -> np.ndarray:
        """Vertex coordinates per element, shape ``(M, 3, 2)``."""
        return self.vertices[self.elements]

    def patch_vertices(self, patch: int) -> np.ndarray:
        """The 6 vertex indices ``(c0, c1, c2, m01, m12, m20)`` of a patch."""
        return np.concatenate([self.corners[patch], self.midpoints[patch]])

    def with_geometry(self, vertices: np.ndarray, elements: np.ndarray) -> "PatchMesh":
        return dataclasses.replace(self, vertices=vertices, elements=elements)


def build_macro_mesh(n: int) -> MacroMesh:
    """Structured ``n x n`` macro mesh of the unit square.

    Each grid square is cut by its lower-left to upper-right diagonal into two
    right isosceles triangles.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    s = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(s, s)
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    ll = (j * (n + 1) + i).ravel()
    lr, ul = ll + 1, ll + n + 1
    ur = ul + 1
    tri = np.empty((2 * n * n, 3), dtype=np.int64)
    tri[0::2] = np.column_stack([ll, lr, ur])
    tri[1::2] = np.column_stack([ll, ur, ul])
    return MacroMesh(vertices, tri, _on_square_boundary(vertices))


def _macro_edges(triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    local = np.stack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=1)
    flat = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse, counts = np.unique(flat, axis=0, return_inverse=True, return_counts=True)
    return edges, inverse.reshape(-1, 3), counts


def check_conformity(m: MacroMesh) -> None:
    """Raise :class:`MeshError` unless ``m`` is a conforming CCW mesh of the unit square."""
    pts = m.vertices[m.triangles]
    areas = signed_areas(pts)
    if np.any(areas <= 0):
        raise MeshError("macro mesh has non-positively oriented triangles")
    if not np.isclose(areas.sum(), 1.0, rtol=1e-12, atol=0.0):
        raise MeshError(f"macro mesh covers area {areas.sum()}, not the unit square")
    edges, _, counts = _macro_edges(m.triangles)
    if np.any(counts > 2):
        raise MeshError("nonconforming mesh: edge shared by more than two triangles")
    lone = edges[counts == 1]
    on_bnd = _on_square_boundary(m.vertices[lone[:, 0]]) & _on_square_boundary(m.vertices[lone[:, 1]])
    mid = 0.5 * (m.vertices[lone[:, 0]] + m.vertices[lone[:, 1]])
    if not np.all(on_bnd & _on_square_boundary(mid)):
        raise MeshError("nonconforming mesh: interior edge belongs to a single triangle")


def refine(m: MacroMesh) -> PatchMesh:
    """Uniform red refinement with patch bookkeeping."""
    check_conformity(m)
    V = m.n_vertices
    edges, patch_edges, _ = _macro_edges(m.triangles)
    mids = 0.5 * (m.vertices[edges[:, 0]] + m.vertices[edges[:, 1]])
    vertices = np.vstack([m.vertices, mids])
    midpoints = V + patch_edges
    c0, c1, c2 = m.triangles.T
    m01, m12, m20 = midpoints.T
    P = m.n_triangles
    elements = np.empty((4 * P, 3), dtype=np.int64)
    elements[0::4] = np.column_stack([c0, m01, m20])
    elements[1::4] = np.column_stack([m01, c1, m12])
    elements[2::4] = np.column_stack([m20, m12, c2])
    elements[3::4] = np.column_stack([m01, m12, m20])
    children = np.arange(4 * P, dtype=np.int64).reshape(P, 4)
    edge_ends = np.full((len(vertices), 2), -1, dtype=np.int64)
    edge_ends[V:] = edges
    boundary = np.concatenate([m.boundary, m.boundary[edges[:, 0]] & m.boundary[edges[:, 1]]
                               & _on_square_boundary(mids)])
    return PatchMesh(vertices=vertices, elements=elements, corners=m.triangles.copy(),
                     midpoints=midpoints, children=children, edges=edges,
                     patch_edges=patch_edges, edge_ends=edge_ends, boundary=boundary,
                     n_macro=V)


def build_patch_mesh(n: int) -> PatchMesh:
    return refine(build_macro_mesh(n))


def mesh_size(p: PatchMesh) -> float:
    """Maximum edge length over all elements."""
    pts = p.element_points()
    d = pts - np.roll(pts, -1, axis=1)
    return float(np.hypot(d[..., 0], d[..., 1]).max())


def mesh_edges(elements: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unique fine edges (sorted pairs) and how many elements share each."""
    local = np.concatenate([elements[:, [0, 1]], elements[:, [1, 2]], elements[:, [2, 0]]])
    return np.unique(np.sort(local, axis=1), axis=0, return_counts=True)


# ---- text export -------------------------------------------------------------

def write_mesh(path, mesh: PatchMesh, tags=None, configs=None) -> None:
    """Write ``mesh`` in the sectioned plain-text format.

    ``tags`` fills the subdomain column of ``$elements`` (0 when absent).
    ``configs`` is an iterable of ``(patch, kind, r, s, t)`` rows written to a
    trailing ``$configs`` section.
    """
    if tags is None:
        tags = np.zeros(mesh.n_elements, dtype=int)
    lines = ["$vertices"]
    for i, ((x, y), b) in enumerate(zip(mesh.vertices, mesh.boundary)):
        lines.append(f"{i} {float(x)!r} {float(y)!r} {int(b)}")
    lines.append("$elements")
    for i, (e, tg) in enumerate(zip(mesh.elements, tags)):
        lines.append(f"{i} {e[0]} {e[1]} {e[2]} {int(tg)}")
    lines.append("$patches")
    for k in range(mesh.n_patches):
        ids = " ".join(str(v) for v in mesh.patch_vertices(k))
        ch = " ".join(str(c) for c in mesh.children[k])
        lines.append(f"{k} {ids} {ch}")
    if configs is not None:
        lines.append("$configs")
        for pid, kind, r, s, t in configs:
            lines.append(f"{pid} {kind} {float(r)!r} {float(s)!r} {float(t)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> dict:
    """Parse a file written by :func:`write_mesh` into plain arrays."""
    sections: dict[str, list[list[str]]] = {}
    current = None
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("$"):
            current = line[1:]
            sections[current] = []
        elif current is None:
            raise MeshError("record outside a section")
        else:
            sections[current].append(line.split())
    out = {}
    v = sections.get("vertices", [])
    out["vertices"] = np.array([[float(r[1]), float(r[2])] for r in v]).reshape(-1, 2)
    out["boundary"] = np.array([r[3] == "1" for r in v], dtype=bool)
    e = sections.get("elements", [])
    out["elements"] = np.array([[int(x) for x in r[1:4]] for r in e], dtype=np.int64).reshape(-1, 3)
    out["tags"] = np.array([int(r[4]) for r in e], dtype=int)
    p = sections.get("patches", [])
    out["patches"] = np.array([[int(x) for x in r[1:]] for r in p], dtype=np.int64).reshape(-1, 10)
    if "configs" in sections:
        out["configs"] = [(int(r[0]), r[1], float(r[2]), float(r[3]), float(r[4]))
                          for r in sections["configs"]]
    return out
