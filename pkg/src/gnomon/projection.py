"""The central projection itself: chart maps, Jacobians and exact fast paths.

On S^n the chart at x sends y to y/(x.y) - x expressed in the deterministic
tangent frame at x, defined for x.y > 0; geodesics map to straight lines, so
geodesic polygons project to straight-edged Euclidean polygons (shoelace fast
path) and caps project to conics (ellipse fast path for admissible caps).

On H^n the analog -y/<x,y> - x is a Klein-type chart, defined everywhere and
landing inside the unit ball of the tangent space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import OutsideHemisphereError
from .regions import Cap, HPolygon, SphericalPolygon, _shoelace, feasibility_margin

__all__ = [
    "ChartPoint",
    "ConicImage",
    "HEMISPHERE_GUARD",
    "gnomonic_fwd",
    "gnomonic_inv",
    "jacobian_sphere",
    "polygon_image_area",
    "cap_image_conic",
    "cap_image_area",
    "hyp_fwd",
    "hyp_inv",
    "hyp_polygon_image_area",
]

# the Jacobian (x.y)^-(n+1) overflows long before x.y reaches 0
HEMISPHERE_GUARD = 1e-9


@dataclass(frozen=True, eq=False)
class ChartPoint:
    """Chart coordinates of a projected point, in the tangent frame at base."""

    base: geo.SpherePoint | geo.HyperPoint
    coords: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coords, dtype=float)).copy()
        if c.shape != (self.base.n,):
            raise ValueError("chart coordinates must have length n")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def to_json(self):
        return {"base": [float(v) for v in self.base.coords],
                "coords": [float(v) for v in self.coords]}


@dataclass(frozen=True)
class ConicImage:
    """Conic image of a cap boundary under the chart at some base point (n = 2).

    kind is "ellipse" exactly when the cap sits inside the open hemisphere of
    the base point; only then is the projected cap bounded with area
    pi * a * b.  For a parabola the center field holds the vertex and the
    semi-axes are infinite.
    """

    kind: str
    center: tuple
    semi_axes: tuple
    orientation: float


def gnomonic_fwd(x: geo.SpherePoint, y: geo.SpherePoint) -> ChartPoint:
    """Central projection of y onto the tangent plane at x, chart coordinates."""
    d = float(x.coords @ y.coords)
    if d <= HEMISPHERE_GUARD:
        raise OutsideHemisphereError(
            f"point is outside the open hemisphere of the base (x.y = {d:.3g})"
        )
    frame = geo.tangent_frame(x)
    return ChartPoint(x, frame @ (y.coords / d - x.coords))


def gnomonic_fwd_many(x: geo.SpherePoint, pts: np.ndarray) -> np.ndarray:
    """(N, n) chart coordinates; rows with x.y <= guard raise."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    d = pts @ x.coords
    if np.any(d <= HEMISPHERE_GUARD):
        raise OutsideHemisphereError("some points fall outside the chart hemisphere")
    frame = geo.tangent_frame(x)
    return (pts / d[:, None] - x.coords) @ frame.T


def gnomonic_inv(x: geo.SpherePoint, u) -> geo.SpherePoint:
    """Inverse chart: (x + U) normalized, U the lift of u into R^{n+1}."""
    coords = u.coords if isinstance(u, ChartPoint) else np.asarray(u, dtype=float)
    if isinstance(u, ChartPoint) and not np.allclose(u.base.coords, x.coords, atol=1e-12):
        raise ValueError("chart point is based at a different point")
    frame = geo.tangent_frame(x)
    lifted = x.coords + coords @ frame
    return geo.SpherePoint(lifted / math.sqrt(1.0 + float(coords @ coords)))


def jacobian_sphere(x: geo.SpherePoint, y: geo.SpherePoint) -> float:
    """Jacobian of the chart at y: (x.y)^-(n+1)."""
    d = float(x.coords @ y.coords)
    if d <= HEMISPHERE_GUARD:
        raise OutsideHemisphereError(
            f"point is outside the open hemisphere of the base (x.y = {d:.3g})"
        )
    return d ** (-(x.n + 1))


def polygon_image_area(x: geo.SpherePoint, p: SphericalPolygon) -> float:
    """Exact projected area of a geodesic polygon: shoelace on projected vertices.

    Geodesics map to straight lines under the central projection, so the image
    of the polygon is the Euclidean polygon on the projected vertices.
    """
    if feasibility_margin(p, x) <= HEMISPHERE_GUARD:
        raise OutsideHemisphereError(
            "polygon is not strictly inside the open hemisphere of the base point"
        )
    chart = gnomonic_fwd_many(x, np.array([v.coords for v in p.vertices]))
    return abs(_shoelace(chart))


def cap_image_conic(x: geo.SpherePoint, c: Cap) -> ConicImage:
    """Conic image of a cap boundary under the chart at x (n = 2 only).

    With psi = dist(x, center) and alpha = cap radius, the boundary satisfies
    (cos psi + sin psi s)^2 = cos^2 alpha (1 + s^2 + t^2) in chart coordinates
    aligned with the geodesic toward the cap center; the discriminant
    cos^2 alpha - sin^2 psi classifies the conic.
    """
    if x.n != 2 or c.n != 2:
        raise ValueError("conic images are available on S^2 only")
    psi = geo.dist_sphere(x, c.center)
    alpha = c.radius
    A = math.cos(alpha) ** 2 - math.sin(psi) ** 2
    # axis direction (in the standard frame) toward the cap center
    u = c.center.coords - math.cos(psi) * x.coords
    nu = float(np.linalg.norm(u))
    frame = geo.tangent_frame(x)
    if nu < 1e-12:
        axis = np.array([1.0, 0.0])
    else:
        axis2 = frame @ (u / nu)
        axis = axis2 / np.linalg.norm(axis2)
    orientation = math.atan2(axis[1], axis[0])
    if abs(A) <= 1e-12:
        # parabola; vertex on the symmetry axis
        denom = 2.0 * math.sin(psi) * math.cos(psi)
        s0 = 0.0 if abs(denom) < 1e-15 else (math.cos(alpha) ** 2 - math.cos(psi) ** 2) / denom
        vertex = s0 * axis
        return ConicImage("parabola", (float(vertex[0]), float(vertex[1])),
                          (math.inf, math.inf), orientation)
    h = math.sin(psi) * math.cos(psi) / A
    rhs = math.cos(alpha) ** 2 * math.sin(alpha) ** 2 / A
    a = math.sqrt(abs(rhs / A))
    b = math.sqrt(abs(rhs) / math.cos(alpha) ** 2)
    center = h * axis
    kind = "ellipse" if A > 0.0 else "hyperbola-branch"
    return ConicImage(kind, (float(center[0]), float(center[1])), (a, b), orientation)


def cap_image_area(x: geo.SpherePoint, c: Cap) -> float:
    """Exact projected area of a cap on S^2: pi a b of its elliptical image."""
    conic = cap_image_conic(x, c)
    if conic.kind != "ellipse":
        raise OutsideHemisphereError(
            "cap is not strictly inside the open hemisphere of the base point"
        )
    return math.pi * conic.semi_axes[0] * conic.semi_axes[1]


def hyp_fwd(x: geo.HyperPoint, y: geo.HyperPoint) -> ChartPoint:
    """Klein-type chart -y/<x,y> - x in the tangent frame at x; norm tanh(dist)."""
    K = -float(geo.lorentz_dot(x.coords, y.coords))
    frame = geo.tangent_frame(x)
    P = y.coords / K - x.coords
    return ChartPoint(x, np.array([float(geo.lorentz_dot(P, f)) for f in frame]))


def hyp_fwd_many(x: geo.HyperPoint, pts: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    K = -geo.lorentz_dot(pts, x.coords)
    frame = geo.tangent_frame(x)
    P = pts / K[:, None] - x.coords
    return np.column_stack([geo.lorentz_dot(P, f) for f in frame])


def hyp_inv(x: geo.HyperPoint, u) -> geo.HyperPoint:
    """Inverse Klein chart, defined for |u| < 1."""
    coords = u.coords if isinstance(u, ChartPoint) else np.asarray(u, dtype=float)
    nsq = float(coords @ coords)
    if nsq >= 1.0:
        raise ValueError("chart coordinates must lie inside the unit ball")
    frame = geo.tangent_frame(x)
    lifted = x.coords + coords @ frame
    return geo.HyperPoint(lifted / math.sqrt(1.0 - nsq))


def hyp_polygon_image_area(x: geo.HyperPoint, p: HPolygon) -> float:
    """Exact projected area of a hyperbolic geodesic polygon (shoelace)."""
    chart = hyp_fwd_many(x, np.array([v.coords for v in p.vertices]))
    return abs(_shoelace(chart))
