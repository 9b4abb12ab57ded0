"""
Elementary planar geometry: points, triangles, interior angles, orientation.

Points are anything indexable as ``(x, y)``; a triangle is a sequence of
three points in counter-clockwise order.  Angles are in degrees.
"""
from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

# relative threshold on |area| / (longest edge)^2 below which a triangle is degenerate
DEGENERACY_TOL = 1e-14


class DegenerateGeometryError(ValueError):
    """Raised for coincident points or zero-area triangles."""


class Point2(NamedTuple):
    x: float
    y: float


class Triangle(NamedTuple):
    a: Point2
    b: Point2
    c: Point2


def make_triangle(a, b, c) -> Triangle:
    """Build a positively oriented :class:`Triangle`, rejecting bad input."""
    t = Triangle(Point2(*map(float, a)), Point2(*map(float, b)), Point2(*map(float, c)))
    for p in t:
        if not (math.isfinite(p.x) and math.isfinite(p.y)):
            raise ValueError(f"non-finite coordinate in {p}")
    if is_degenerate(t):
        raise DegenerateGeometryError("degenerate triangle")
    if signed_area(t) <= 0.0:
        raise ValueError("triangle is not counter-clockwise")
    return t


def angle_at(a, b, c) -> float:
    """Interior angle at ``b`` of the triangle ``a, b, c``, in degrees.

    Computed as the arccosine of the normalized inner product of ``a - b``
    and ``c - b``; the cosine is clipped to [-1, 1] against round-off.
    """
    ux, uy = a[0] - b[0], a[1] - b[1]
    vx, vy = c[0] - b[0], c[1] - b[1]
    nu = math.hypot(ux, uy)
    nv = math.hypot(vx, vy)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateGeometryError("degenerate angle")
    cos = (ux * vx + uy * vy) / (nu * nv)
    return math.degrees(math.acos(min(1.0, max(-1.0, cos))))


def signed_area(t: Sequence) -> float:
    """Half the cross product of the edge vectors; positive for CCW."""
    a, b, c = t
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def edge_lengths(t: Sequence) -> tuple[float, float, float]:
    """Lengths of the edges opposite to vertices a, b, c."""
    a, b, c = t
    return (math.dist(b, c), math.dist(c, a), math.dist(a, b))


def is_degenerate(t: Sequence) -> bool:
    longest = max(edge_lengths(t))
    return longest == 0.0 or abs(signed_area(t)) < DEGENERACY_TOL * longest**2


def interior_angles(t: Sequence) -> tuple[float, float, float]:
    """The three interior angles at a, b, c."""
    if is_degenerate(t):
        raise DegenerateGeometryError("degenerate triangle")
    a, b, c = t
    return (angle_at(c, a, b), angle_at(a, b, c), angle_at(b, c, a))


def max_angle(t: Sequence) -> float:
    """Largest interior angle of ``t``."""
    return max(interior_angles(t))


def max_edge_length(t: Sequence) -> float:
    return max(edge_lengths(t))


# ---- vectorized helpers ------------------------------------------------------

def signed_areas(p: np.ndarray) -> np.ndarray:
    """Signed areas for an ``(..., 3, 2)`` array of triangles."""
    a, b, c = p[..., 0, :], p[..., 1, :], p[..., 2, :]
    return 0.5 * ((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
                  - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0]))


def triangle_angles(p: np.ndarray) -> np.ndarray:
    """Interior angles (degrees) for an ``(..., 3, 2)`` array of triangles.

    Returns an ``(..., 3)`` array; column ``k`` is the angle at vertex ``k``.
    Zero-length edges produce NaN.
    """
    out = np.empty(p.shape[:-1])
    for k in range(3):
        u = p[..., (k + 1) % 3, :] - p[..., k, :]
        v = p[..., (k + 2) % 3, :] - p[..., k, :]
        nu = np.hypot(u[..., 0], u[..., 1])
        nv = np.hypot(v[..., 0], v[..., 1])
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = (u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1]) / (nu * nv)
        out[..., k] = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
    return out
