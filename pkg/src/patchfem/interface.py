"""
Implicit interfaces and classification of macro patches by how they are cut.

The interface is the zero set of a level-set function ``phi``; ``phi < 0`` is
subdomain 1 and ``phi > 0`` subdomain 2.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .mesh import PatchMesh

log = logging.getLogger(__name__)

SNAP_TOL = 1e-8
BISECTION_MAX_ITER = 60
BISECTION_RTOL = 1e-12
N_SIGN_SAMPLES = 32


class AssumptionViolated(ValueError):
    """The interface cuts a patch in a way the fitting cannot represent."""

    def __init__(self, detail: str = ""):
        msg = "assumption violated: refine macro mesh"
        super().__init__(f"{msg} ({detail})" if detail else msg)


class LevelSetInterface:
    """Base class; subclasses implement the vectorized ``__call__(x, y)``."""

    def __call__(self, x, y):
        raise NotImplementedError

    def at(self, p) -> float:
        return float(self(np.asarray(p[0], dtype=float), np.asarray(p[1], dtype=float)))

    def spec(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Circle(LevelSetInterface):
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("circle radius must be positive")

    def __call__(self, x, y):
        return np.hypot(x - self.center[0], y - self.center[1]) - self.radius

    def spec(self) -> str:
        return f"circle:{self.center[0]!r},{self.center[1]!r},{self.radius!r}"


@dataclass(frozen=True)
class Affine(LevelSetInterface):
    """``phi(x, y) = nx * x + ny * y - c``."""

    normal: tuple[float, float]
    offset: float

    def __post_init__(self):
        if self.normal[0] == 0 and self.normal[1] == 0:
            raise ValueError("affine interface needs a nonzero normal")

    def __call__(self, x, y):
        return self.normal[0] * x + self.normal[1] * y - self.offset

    def spec(self) -> str:
        return f"affine:{self.normal[0]!r},{self.normal[1]!r},{self.offset!r}"


@dataclass(frozen=True)
class FunctionLevelSet(LevelSetInterface):
    """Wrap an arbitrary vectorized callable ``func(x, y)``."""

    func: Callable
    name: str = "function"

    def __call__(self, x, y):
        return np.array(np.broadcast_to(np.asarray(self.func(x, y), dtype=float),
                                        np.broadcast(x, y).shape))

    def spec(self) -> str:
        return self.name


def parse_interface(text: str) -> LevelSetInterface:
    """Parse ``circle:cx,cy,R`` or ``affine:nx,ny,c``."""
    kind, _, args = text.partition(":")
    try:
        vals = [float(v) for v in args.split(",")]
    except ValueError:
        raise ValueError(f"bad interface string {text!r}") from None
    if len(vals) != 3:
        raise ValueError(f"interface string {text!r} needs three numbers")
    if kind == "circle":
        return Circle((vals[0], vals[1]), vals[2])
    if kind == "affine":
        return Affine((vals[0], vals[1]), vals[2])
    raise ValueError(f"unknown interface kind {kind!r}")


# ---- edge intersections --------------------------------------------------------

def _bisect(phi, a: np.ndarray, b: np.ndarray, fa: np.ndarray, fb: np.ndarray) -> np.ndarray:
    """Vectorized bisection on segments ``a[k] -> b[k]`` with ``fa * fb < 0``."""
    lo = np.zeros(len(a))
    hi = np.ones(len(a))
    flo = fa.copy()
    tol = BISECTION_RTOL * (np.abs(fa) + np.abs(fb))
    out = np.full(len(a), np.nan)
    active = np.ones(len(a), dtype=bool)
    d = b - a
    for _ in range(BISECTION_MAX_ITER):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        mid = 0.5 * (lo[idx] + hi[idx])
        p = a[idx] + mid[:, None] * d[idx]
        fm = phi(p[:, 0], p[:, 1])
        done = np.abs(fm) <= tol[idx]
        out[idx[done]] = mid[done]
        active[idx[done]] = False
        go_right = ~done & (np.sign(fm) == np.sign(flo[idx]))
        go_left = ~done & ~go_right
        lo[idx[go_right]] = mid[go_right]
        flo[idx[go_right]] = fm[go_right]
        hi[idx[go_left]] = mid[go_left]
    rest = np.flatnonzero(active)
    out[rest] = 0.5 * (lo[rest] + hi[rest])
    return out


def edge_intersection(phi: LevelSetInterface, a, b) -> float | None:
    """Parameter ``lam`` in (0, 1) with ``phi(a + lam (b - a)) = 0``, or None.

    Only a strict sign change between the endpoints counts as an intersection.
    """
    a = np.asarray(a, dtype=float).reshape(1, 2)
    b = np.asarray(b, dtype=float).reshape(1, 2)
    fa = np.atleast_1d(phi(a[:, 0], a[:, 1])).astype(float)
    fb = np.atleast_1d(phi(b[:, 0], b[:, 1])).astype(float)
    if not fa[0] * fb[0] < 0:
        return None
    return float(_bisect(phi, a, b, fa, fb)[0])


def count_sign_changes(values: np.ndarray) -> np.ndarray:
    """Sign changes along the last axis, skipping exact zeros."""
    s = np.sign(values)
    counts = np.zeros(values.shape[:-1], dtype=int)
    last = np.zeros(values.shape[:-1])
    for k in range(values.shape[-1]):
        cur = s[..., k]
        counts += (cur != 0) & (last != 0) & (cur != last)
        last = np.where(cur != 0, cur, last)
    return counts


@dataclass(frozen=True)
class EdgeCuts:
    """Interface data per macro edge, parametrized from the lower vertex index.

    ``lam[e]`` is NaN when the endpoint values do not change sign.
    """

    phi_vertex: np.ndarray   # phi at macro vertices
    lam: np.ndarray          # (E,)
    sign_changes: np.ndarray  # (E,) from equispaced sampling


def compute_edge_cuts(mesh: PatchMesh, phi: LevelSetInterface) -> EdgeCuts:
    X = mesh.vertices[: mesh.n_macro]
    fv = np.asarray(phi(X[:, 0], X[:, 1]), dtype=float)
    a = X[mesh.edges[:, 0]]
    b = X[mesh.edges[:, 1]]
    fa, fb = fv[mesh.edges[:, 0]], fv[mesh.edges[:, 1]]
    lam = np.full(len(a), np.nan)
    cut = fa * fb < 0
    if cut.any():
        lam[cut] = _bisect(phi, a[cut], b[cut], fa[cut], fb[cut])
    ts = np.linspace(0.0, 1.0, N_SIGN_SAMPLES)
    pts = a[:, None, :] + ts[None, :, None] * (b - a)[:, None, :]
    samples = np.array(phi(pts[..., 0], pts[..., 1]), dtype=float)
    samples[:, 0], samples[:, -1] = fa, fb
    return EdgeCuts(fv, lam, count_sign_changes(samples))


# ---- patch classification -------------------------------------------------------

class CutKind(Enum):
    NOT_CUT = "not_cut"
    TWO_EDGES = "two_edges"
    VERTEX_EDGE = "vertex_edge"


@dataclass(frozen=True)
class CutClassification:
    """How the interface crosses one patch.

    ``order`` holds the local corner ids playing the roles ``(P1, P2, P3)``.
    For TWO_EDGES, P1 is the corner shared by the two cut edges and ``s``, ``r``
    are the cut positions on P1P2 and P1P3 as fractions measured from P1.
    For VERTEX_EDGE, P2 is the cut corner and ``r`` locates the cut on P1P3.
    """

    kind: CutKind
    order: tuple[int, int, int] = (0, 1, 2)
    r: float = math.nan
    s: float = math.nan

    @property
    def is_cut(self) -> bool:
        return self.kind is not CutKind.NOT_CUT


NOT_CUT = CutClassification(CutKind.NOT_CUT)


def _fraction_from_start(mesh: PatchMesh, patch: int, k: int, lam: float) -> float:
    """Convert a canonical edge parameter to a fraction from corner ``k``."""
    c = mesh.corners[patch]
    return lam if c[k] < c[(k + 1) % 3] else 1.0 - lam


def classify_patch(mesh: PatchMesh, patch: int, phi: LevelSetInterface,
                   snap_tol: float = SNAP_TOL, cuts: EdgeCuts | None = None) -> CutClassification:
    """Classify one patch; see :class:`CutClassification`.

    Intersections within ``snap_tol`` (relative) of an edge end are snapped to
    that corner.  ``cuts`` lets callers share a precomputed :class:`EdgeCuts`;
    results are identical either way.
    """
    if not 0 < snap_tol < 0.1:
        raise ValueError("snap_tol must lie in (0, 0.1)")
    if cuts is None:
        cuts = _local_cuts(mesh, patch, phi)
        edge_ids = range(3)
    else:
        edge_ids = mesh.patch_edges[patch]
    corners = mesh.corners[patch]
    on = {k for k in range(3) if cuts.phi_vertex[corners[k]] == 0.0}
    interior: dict[int, float] = {}
    for k, e in enumerate(edge_ids):
        if cuts.sign_changes[e] > 1:
            raise AssumptionViolated(f"patch {patch}: multiple crossings on one edge")
        lam = cuts.lam[e]
        if math.isnan(lam):
            if cuts.sign_changes[e]:
                # zero at an end plus an interior crossing
                raise AssumptionViolated(f"patch {patch}: edge through a corner crosses again")
            continue
        f = _fraction_from_start(mesh, patch, k, lam)
        if f < snap_tol:
            on.add(k)
        elif f > 1.0 - snap_tol:
            on.add((k + 1) % 3)
        else:
            interior[k] = f

    if not interior:
        if len(on) >= 2:
            log.info("patch %d: interface runs through corners %s; left unmodified",
                     patch, sorted(int(corners[k]) for k in on))
        return NOT_CUT
    if len(interior) == 2 and not on:
        k1, k2 = sorted(interior)
        # edges k and k+1 share corner k+1; edges 0 and 2 share corner 0
        apex = k2 if k2 == k1 + 1 else 0
        p2, p3 = (apex + 1) % 3, (apex + 2) % 3
        s = interior[apex]
        r = 1.0 - interior[p3]
        return CutClassification(CutKind.TWO_EDGES, (apex, p2, p3), r=r, s=s)
    if len(interior) == 1 and len(on) == 1:
        (cut_corner,) = on
        (k,) = interior
        if k != (cut_corner + 1) % 3:
            raise AssumptionViolated(f"patch {patch}: corner cut with crossing on adjacent edge")
        p2, p3, p1 = cut_corner, (cut_corner + 1) % 3, (cut_corner + 2) % 3
        return CutClassification(CutKind.VERTEX_EDGE, (p1, p2, p3), r=1.0 - interior[k])
    raise AssumptionViolated(f"patch {patch}: {len(interior)} edge crossings, {len(on)} corner hits")


def _local_cuts(mesh: PatchMesh, patch: int, phi: LevelSetInterface) -> EdgeCuts:
    """Edge data for the three edges of one patch, oriented canonically."""
    corners = mesh.corners[patch]
    X = mesh.vertices
    fv = {int(c): mesh_phi for c, mesh_phi in zip(corners, phi(X[corners, 0], X[corners, 1]))}
    phi_vertex = np.zeros(mesh.n_macro)
    for c, v in fv.items():
        phi_vertex[c] = v
    lam = np.full(3, np.nan)
    changes = np.zeros(3, dtype=int)
    ts = np.linspace(0.0, 1.0, N_SIGN_SAMPLES)
    for k in range(3):
        i, j = sorted((int(corners[k]), int(corners[(k + 1) % 3])))
        a, b = X[i], X[j]
        # same arithmetic as compute_edge_cuts so shared edges agree bit for bit
        fa = np.array([fv[i]])
        fb = np.array([fv[j]])
        if fa[0] * fb[0] < 0:
            lam[k] = _bisect(phi, a[None, :], b[None, :], fa, fb)[0]
        pts = a[None, :] + ts[:, None] * (b - a)[None, :]
        samples = np.array(phi(pts[:, 0], pts[:, 1]), dtype=float)
        samples[0], samples[-1] = fa[0], fb[0]
        changes[k] = count_sign_changes(samples)
    return EdgeCuts(phi_vertex, lam, changes)


def classify_all(mesh: PatchMesh, phi: LevelSetInterface,
                 snap_tol: float = SNAP_TOL) -> tuple[list[CutClassification], EdgeCuts]:
    cuts = compute_edge_cuts(mesh, phi)
    return [classify_patch(mesh, k, phi, snap_tol, cuts) for k in range(mesh.n_patches)], cuts
