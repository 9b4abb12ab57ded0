"""
Local mesh modification: move the midpoints of cut patches onto the interface.

For a patch cut through two edges, P1 is the corner where the cut edges meet
and the cut positions ``r`` (on P1P3) and ``s`` (on P1P2) fix P6 and P4.  The
third point P5 on P2P3 is placed by ``t``:

    A   r, s <= 1/2            t = 1/2
    B   r, s >  1/2            t = 1 - s
    C   otherwise              t = 1/2

A patch cut through its corner P2 and the opposite edge (at ``r``) is
configuration D:

    D1  r <= 1/2   s = r,   t = 1/2
    D2  r >  1/2   s = 1/2, t = r

and its children T2, T4 are flipped so that the chord P2P6 becomes an edge.
All placement parameters are fractions of the respective edge.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .geometry import signed_areas, triangle_angles
from .interface import (SNAP_TOL, AssumptionViolated, CutClassification, CutKind,
                        LevelSetInterface, classify_all)
from .mesh import PatchMesh

log = logging.getLogger(__name__)

KINDS = ("A", "B", "C", "D1", "D2")

REFERENCE_PATCH = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])


class FittingError(ValueError):
    pass


@dataclass(frozen=True)
class Configuration:
    kind: str
    r: float
    s: float
    t: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown configuration {self.kind!r}")
        for name in ("r", "s", "t"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"parameter {name}={v} outside [0, 1]")

    @property
    def is_vertex_cut(self) -> bool:
        return self.kind in ("D1", "D2")


def select_configuration(c: CutClassification) -> Configuration:
    """Choose the configuration and the free parameters for a cut patch."""
    if c.kind is CutKind.TWO_EDGES:
        r, s = c.r, c.s
        if r <= 0.5 and s <= 0.5:
            return Configuration("A", r, s, 0.5)
        if r > 0.5 and s > 0.5:
            return Configuration("B", r, s, 1.0 - s)
        return Configuration("C", r, s, 0.5)
    if c.kind is CutKind.VERTEX_EDGE:
        r = c.r
        if r <= 0.5:
            return Configuration("D1", r, r, 0.5)
        return Configuration("D2", r, 0.5, r)
    raise FittingError("nothing to fit")


def place_points(P1, P2, P3, cfg: Configuration) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Positions of P4 (on P1P2), P5 (on P2P3) and P6 (on P1P3)."""
    P1, P2, P3 = (np.asarray(p, dtype=float) for p in (P1, P2, P3))
    if signed_areas(np.array([P1, P2, P3])) <= 0:
        raise FittingError("patch corners are not positively oriented")
    return P1 + cfg.s * (P2 - P1), P2 + cfg.t * (P3 - P2), P1 + cfg.r * (P3 - P1)


def child_triangles(P1, P2, P3, P4, P5, P6, vertex_cut: bool) -> np.ndarray:
    """The four children ``T1 .. T4`` as a ``(4, 3, 2)`` array (works batched)."""
    if vertex_cut:
        tris = [(P1, P4, P6), (P4, P2, P6), (P6, P5, P3), (P2, P5, P6)]
    else:
        tris = [(P1, P4, P6), (P4, P2, P5), (P6, P5, P3), (P4, P5, P6)]
    return np.stack([np.stack(t, axis=-2) for t in tris], axis=-3)


def fitted_patch_angles(P1, P2, P3, cfg: Configuration) -> np.ndarray:
    """Interior angles ``(4, 3)`` of the children of a fitted patch."""
    P4, P5, P6 = place_points(P1, P2, P3, cfg)
    tris = child_triangles(*(np.asarray(p, dtype=float) for p in (P1, P2, P3)), P4, P5, P6,
                           cfg.is_vertex_cut)
    return triangle_angles(tris)


@dataclass
class FittedMesh:
    """A patch mesh after local modification, plus per-element subdomain tags.

    ``mesh`` carries the moved vertices and the (possibly flipped) children;
    ``base`` is the unmodified input.
    """

    mesh: PatchMesh
    base: PatchMesh
    tags: np.ndarray
    phi: LevelSetInterface | None = None
    configs: dict[int, Configuration] = field(default_factory=dict)
    classifications: list[CutClassification] = field(default_factory=list)
    moved: np.ndarray | None = None

    @property
    def vertices(self) -> np.ndarray:
        return self.mesh.vertices

    @property
    def elements(self) -> np.ndarray:
        return self.mesh.elements

    @property
    def n_vertices(self) -> int:
        return self.mesh.n_vertices

    @property
    def n_elements(self) -> int:
        return self.mesh.n_elements

    def config_rows(self):
        return [(pid, c.kind, c.r, c.s, c.t) for pid, c in sorted(self.configs.items())]

    def chord(self, patch: int) -> tuple[int, int]:
        """Vertex indices of the interface chord inside a cut patch."""
        cls = self.classifications[patch]
        p1, p2, p3 = cls.order
        mids = self.mesh.midpoints[patch]
        P6 = mids[p3]
        if cls.kind is CutKind.VERTEX_EDGE:
            return int(self.mesh.corners[patch, p2]), int(P6)
        return int(mids[p1]), int(P6)


def tag_elements(vertices: np.ndarray, elements: np.ndarray, phi: LevelSetInterface) -> np.ndarray:
    """Subdomain tag per element from the sign of ``phi`` at its centroid."""
    cen = vertices[elements].mean(axis=1)
    return np.where(np.asarray(phi(cen[:, 0], cen[:, 1])) < 0, 1, 2)


def unfitted(mesh: PatchMesh, phi: LevelSetInterface) -> FittedMesh:
    """Tag elements by centroid sign without moving any node."""
    return FittedMesh(mesh=mesh, base=mesh, tags=tag_elements(mesh.vertices, mesh.elements, phi),
                      phi=phi, moved=np.zeros(mesh.n_vertices, dtype=bool))


def fit_mesh(mesh: PatchMesh, phi: LevelSetInterface, snap_tol: float = SNAP_TOL) -> FittedMesh:
    """Resolve the interface by moving midpoints of cut patches.

    Vertex and element counts are unchanged.  A midpoint shared by two cut
    patches must receive the same position from both; interface points are
    computed once per macro edge, so this only fails if two patches make
    incompatible free choices, which is reported as an assumption violation.
    """
    classes, cuts = classify_all(mesh, phi, snap_tol)
    X0 = mesh.vertices
    X = X0.copy()
    elements = mesh.elements.copy()
    requests: dict[int, tuple[np.ndarray, int]] = {}
    configs: dict[int, Configuration] = {}
    scale = float(np.ptp(X0, axis=0).max()) or 1.0

    def request(v: int, pos: np.ndarray, patch: int) -> None:
        prev = requests.get(v)
        if prev is None:
            requests[v] = (pos, patch)
        elif not np.allclose(prev[0], pos, rtol=0.0, atol=1e-13 * scale):
            raise AssumptionViolated(
                f"patches {prev[1]} and {patch} place vertex {v} differently")

    for pid, cls in enumerate(classes):
        if not cls.is_cut:
            continue
        cfg = select_configuration(cls)
        configs[pid] = cfg
        p1, p2, p3 = cls.order
        c = mesh.corners[pid]
        mids = mesh.midpoints[pid]
        P1, P2, P3 = X0[c[p1]], X0[c[p2]], X0[c[p3]]
        P4, P5, P6 = place_points(P1, P2, P3, cfg)
        # interface points straight from the shared edge parameter
        i, j = mesh.edges[mesh.patch_edges[pid, p3]]
        P6 = X0[i] + cuts.lam[mesh.patch_edges[pid, p3]] * (X0[j] - X0[i])
        if cls.kind is CutKind.TWO_EDGES:
            e = mesh.patch_edges[pid, p1]
            i, j = mesh.edges[e]
            P4 = X0[i] + cuts.lam[e] * (X0[j] - X0[i])
        if cfg.s == 0.5:
            P4 = X0[mids[p1]]
        if cfg.t == 0.5:
            P5 = X0[mids[p2]]
        request(int(mids[p1]), P4, pid)
        request(int(mids[p2]), P5, pid)
        request(int(mids[p3]), P6, pid)
        if cfg.is_vertex_cut:
            ch = mesh.children[pid]
            v = {1: c[p1], 2: c[p2], 3: c[p3], 4: mids[p1], 5: mids[p2], 6: mids[p3]}
            elements[ch[p1]] = (v[1], v[4], v[6])
            elements[ch[p2]] = (v[4], v[2], v[6])
            elements[ch[p3]] = (v[6], v[5], v[3])
            elements[ch[3]] = (v[2], v[5], v[6])

    for v, (pos, _) in requests.items():
        X[v] = pos
    moved = np.any(X != X0, axis=1)

    for pid in range(mesh.n_patches):
        if pid in configs:
            continue
        touched = [int(v) for v in mesh.midpoints[pid] if moved[v]]
        if touched:
            log.debug("uncut patch %d has moved midpoints %s", pid, touched)

    areas = signed_areas(X[elements])
    if np.any(areas <= 0):
        bad = np.flatnonzero(areas <= 0)
        raise FittingError(f"fitting produced invalid mesh (elements {bad[:10].tolist()})")
    fitted = mesh.with_geometry(X, elements)
    return FittedMesh(mesh=fitted, base=mesh, tags=tag_elements(X, elements, phi), phi=phi,
                      configs=configs, classifications=classes, moved=moved)


def verify_angles(f: FittedMesh | PatchMesh) -> tuple[float, int]:
    """Largest interior angle over all elements and the element attaining it."""
    mesh = f.mesh if isinstance(f, FittedMesh) else f
    ang = triangle_angles(mesh.element_points()).max(axis=1)
    k = int(np.argmax(ang))
    return float(ang[k]), k


# ---- reference patch sweep ----------------------------------------------------

def _batched_configs(r: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Vectorized ``t`` for two-edge cuts."""
    return np.where((r > 0.5) & (s > 0.5), 1.0 - s, 0.5)


def _sweep_max(P: np.ndarray, r: np.ndarray, s: np.ndarray, t: np.ndarray, vertex_cut: bool) -> float:
    P1, P2, P3 = (np.broadcast_to(P[k], r.shape + (2,)) for k in range(3))
    P4 = P1 + s[:, None] * (P2 - P1)
    P5 = P2 + t[:, None] * (P3 - P2)
    P6 = P1 + r[:, None] * (P3 - P1)
    tris = child_triangles(P1, P2, P3, P4, P5, P6, vertex_cut)
    if np.any(signed_areas(tris) <= 0):
        raise FittingError("inverted child in reference sweep")
    return float(np.nanmax(triangle_angles(tris)))


def reference_patch_sweep(m: int, patch: np.ndarray = REFERENCE_PATCH) -> float:
    """Max child angle over an ``m x m`` grid of cut positions and the D family.

    Grid values are ``k / (m + 1)``, ``k = 1 .. m``, for both ``r`` and ``s``.
    """
    if m < 2:
        raise ValueError("sweep needs m >= 2")
    vals = np.arange(1, m + 1) / (m + 1)
    worst = 0.0
    chunk = max(1, 200_000 // m)
    for start in range(0, m, chunk):
        R, S = np.meshgrid(vals[start:start + chunk], vals, indexing="ij")
        r, s = R.ravel(), S.ravel()
        worst = max(worst, _sweep_max(patch, r, s, _batched_configs(r, s), False))
    d1 = vals <= 0.5
    r = vals
    s = np.where(d1, r, 0.5)
    t = np.where(d1, 0.5, r)
    worst = max(worst, _sweep_max(patch, r, s, t, True))
    return worst
