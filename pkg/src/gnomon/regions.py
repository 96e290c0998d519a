"""Integration domains on S^n and H^n.

Region algebra: caps (metric balls), geodesic polygons (n = 2), disjoint
unions, hyperbolic interval sets (n = 1); membership tests, exact measure,
smallest enclosing caps, feasibility margins against the admissibility
constraint x.y > 0, seeded sampling, random ensemble generation and the JSON
region schema.

Regions are immutable and validated at construction; sampling is pure given
(seed, count) and driven by a counter-based Philox stream so results do not
depend on how work is split across threads.
"""
from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize as _sciopt
from scipy import special as _sps

from . import geometry as geo
from .errors import (
    InfeasibleTargetError,
    InvalidRegionError,
    NotInOpenHemisphereError,
    RejectionStallError,
)

__all__ = [
    "Cap",
    "SphericalPolygon",
    "RegionUnion",
    "HCap",
    "HRegionUnion",
    "HPolygon",
    "HIntervalSet",
    "region_dim",
    "region_manifold",
    "contains",
    "contains_mask",
    "measure",
    "enclosing_cap",
    "feasibility_margin",
    "sample",
    "random_region",
    "random_hregion",
    "sphere_surface_volume",
    "unit_ball_volume",
    "cap_measure",
    "hcap_measure",
    "region_to_json",
    "region_from_json",
    "parse_region",
    "load_region",
    "dump_region",
]

# scipy's SLSQP wrapper is not re-entrant; serialize calls when regions are
# built from worker threads
_SLSQP_LOCK = threading.Lock()

_REJECTION_BATCH = 8192
_UNION_CHECK_SEED = 20250810


# ---------------------------------------------------------------------------
# measure helpers

def sphere_surface_volume(m: int) -> float:
    """Surface measure of S^m: 2 pi^((m+1)/2) / Gamma((m+1)/2)."""
    return 2.0 * math.pi ** ((m + 1) / 2.0) / math.gamma((m + 1) / 2.0)


def unit_ball_volume(n: int) -> float:
    """Lebesgue volume of the unit ball in R^n."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def _sin_power_integral(m: int, a: float) -> float:
    """Integral of sin^m t over [0, a] for a in [0, pi]."""
    if a <= 0.0:
        return 0.0
    if m == 0:
        return a
    if m == 1:
        return 1.0 - math.cos(a)
    if m == 2:
        return 0.5 * (a - math.sin(a) * math.cos(a))
    total = _sps.beta((m + 1) / 2.0, 0.5)
    if a >= math.pi:
        return float(total)
    if a <= math.pi / 2.0:
        return float(0.5 * total * _sps.betainc((m + 1) / 2.0, 0.5, math.sin(a) ** 2))
    return float(total) - _sin_power_integral(m, math.pi - a)


def _sinh_power_integral(m: int, a: float) -> float:
    """Integral of sinh^m t over [0, a]."""
    if a <= 0.0:
        return 0.0
    if m == 0:
        return a
    if m == 1:
        return math.cosh(a) - 1.0
    if m == 2:
        return 0.5 * (math.sinh(a) * math.cosh(a) - a)
    # recurrence: I_m = (sinh^{m-1} a cosh a - (m-1) I_{m-2}) / m
    return (math.sinh(a) ** (m - 1) * math.cosh(a) - (m - 1) * _sinh_power_integral(m - 2, a)) / m


def cap_measure(n: int, radius: float) -> float:
    """Standard measure of a spherical cap of the given geodesic radius on S^n."""
    return sphere_surface_volume(n - 1) * _sin_power_integral(n - 1, radius)


def hcap_measure(n: int, radius: float) -> float:
    """Standard measure of a hyperbolic metric ball of the given radius on H^n."""
    return sphere_surface_volume(n - 1) * _sinh_power_integral(n - 1, radius)


# ---------------------------------------------------------------------------
# small planar helpers (chart-space geometry)

def _shoelace(pts: np.ndarray) -> float:
    x = pts[:, 0]
    y = pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _points_in_planar_polygon(P: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Even-odd crossing test, vectorized over query points P (N,2)."""
    inside = np.zeros(len(P), dtype=bool)
    px, py = P[:, 0], P[:, 1]
    k = len(V)
    for i in range(k):
        x1, y1 = V[i]
        x2, y2 = V[(i + 1) % k]
        straddles = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = (x2 - x1) * (py - y1) / (y2 - y1) + x1
        inside ^= straddles & (px < xs)
    return inside


def _segments_properly_intersect(a, b, c, d) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return (o1 * o2 < 0.0) and (o3 * o4 < 0.0)


def _polygon_is_simple(V: np.ndarray) -> bool:
    k = len(V)
    for i in range(k):
        a, b = V[i], V[(i + 1) % k]
        for j in range(i + 1, k):
            if j == i or (j + 1) % k == i or (i + 1) % k == j:
                continue
            c, d = V[j], V[(j + 1) % k]
            if _segments_properly_intersect(a, b, c, d):
                return False
    return True


# ---------------------------------------------------------------------------
# region types

@dataclass(frozen=True, eq=False)
class Cap:
    """Closed metric ball on S^n; doubles as the comparison disc."""

    center: geo.SpherePoint
    radius: float

    def __post_init__(self):
        r = float(self.radius)
        if not (0.0 < r < math.pi):
            raise InvalidRegionError(f"cap radius must be in (0, pi), got {r!r}")
        object.__setattr__(self, "radius", r)

    @property
    def n(self) -> int:
        return self.center.n


@dataclass(frozen=True, eq=False)
class SphericalPolygon:
    """Simple geodesic polygon on S^2, vertices ordered counterclockwise.

    Validation requires consecutive vertices to be distinct and non-antipodal
    (edges are minor arcs), the whole polygon to fit in the open hemisphere
    around its normalized vertex centroid (which anchors the membership chart),
    a simple boundary, and counterclockwise orientation seen from outside.
    """

    vertices: tuple

    def __post_init__(self):
        verts = tuple(self.vertices)
        if len(verts) < 3:
            raise InvalidRegionError("polygon needs at least 3 vertices")
        for v in verts:
            if not isinstance(v, geo.SpherePoint) or v.n != 2:
                raise InvalidRegionError("polygon vertices must be points of S^2")
        V = np.array([v.coords for v in verts])
        k = len(verts)
        for i in range(k):
            d = float(V[i] @ V[(i + 1) % k])
            if d >= 1.0 - 1e-12:
                raise InvalidRegionError(f"repeated consecutive vertices at index {i}")
            if d <= -1.0 + 1e-9:
                raise InvalidRegionError(f"consecutive vertices near-antipodal at index {i}")
        ctr = V.sum(axis=0)
        nc = float(np.linalg.norm(ctr))
        if nc < 1e-9:
            raise InvalidRegionError("polygon has no usable chart hemisphere (degenerate centroid)")
        x0 = ctr / nc
        dots = V @ x0
        if np.any(dots <= 1e-9):
            raise InvalidRegionError(
                "polygon does not fit in the open hemisphere around its vertex centroid"
            )
        center = geo.SpherePoint(x0)
        frame = geo.tangent_frame(center)
        chart = (V / dots[:, None] - x0) @ frame.T
        if not _polygon_is_simple(chart):
            raise InvalidRegionError("polygon boundary is not simple")
        if _shoelace(chart) <= 0.0:
            raise InvalidRegionError(
                "polygon vertices must be ordered counterclockwise (seen from outside)"
            )
        chart.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "_chart_center", center)
        object.__setattr__(self, "_chart_frame", frame)
        object.__setattr__(self, "_chart_verts", chart)
        object.__setattr__(self, "_enc_cache", [None])

    @property
    def n(self) -> int:
        return 2


@dataclass(frozen=True, eq=False)
class RegionUnion:
    """Union of pairwise interior-disjoint spherical regions.

    Cap/cap disjointness is checked exactly; other pairs are cross-checked by
    membership tests on 10^4 seeded samples.
    """

    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if len(parts) < 1:
            raise InvalidRegionError("union needs at least one part")
        dims = {region_dim(p) for p in parts}
        if len(dims) != 1:
            raise InvalidRegionError("union parts must share one dimension")
        for p in parts:
            if region_manifold(p) != "sphere":
                raise InvalidRegionError("union parts must be spherical regions")
        # exact test for cap pairs, sampled cross-membership otherwise
        caps = [p for p in parts if isinstance(p, Cap)]
        for i in range(len(caps)):
            for j in range(i + 1, len(caps)):
                d = geo.dist_sphere(caps[i].center, caps[j].center)
                if d < caps[i].radius + caps[j].radius - 1e-12:
                    raise InvalidRegionError("union parts overlap (caps intersect)")
        if len(parts) > 1 and len(caps) != len(parts):
            per = max(10000 // len(parts), 100)
            for i, p in enumerate(parts):
                pts = _sample_region(np.random.Generator(np.random.Philox(key=_UNION_CHECK_SEED + i)), p, per)
                for j, q in enumerate(parts):
                    if i == j:
                        continue
                    if np.any(contains_mask(q, pts)):
                        raise InvalidRegionError(f"union parts {i} and {j} overlap")
        object.__setattr__(self, "parts", parts)

    @property
    def n(self) -> int:
        return region_dim(self.parts[0])


@dataclass(frozen=True, eq=False)
class HRegionUnion:
    """Union of pairwise interior-disjoint hyperbolic regions."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if len(parts) < 1:
            raise InvalidRegionError("union needs at least one part")
        dims = {region_dim(p) for p in parts}
        if len(dims) != 1:
            raise InvalidRegionError("union parts must share one dimension")
        for p in parts:
            if region_manifold(p) != "hyperbolic":
                raise InvalidRegionError("union parts must be hyperbolic regions")
        caps = [p for p in parts if isinstance(p, HCap)]
        for i in range(len(caps)):
            for j in range(i + 1, len(caps)):
                d = geo.dist_hyp(caps[i].center, caps[j].center)
                if d < caps[i].radius + caps[j].radius - 1e-12:
                    raise InvalidRegionError("union parts overlap (caps intersect)")
        if len(parts) > 1 and len(caps) != len(parts):
            per = max(10000 // len(parts), 100)
            for i, p in enumerate(parts):
                pts = _sample_region(np.random.Generator(np.random.Philox(key=_UNION_CHECK_SEED + i)), p, per)
                for j, qr in enumerate(parts):
                    if i == j:
                        continue
                    if np.any(contains_mask(qr, pts)):
                        raise InvalidRegionError(f"union parts {i} and {j} overlap")
        object.__setattr__(self, "parts", parts)

    @property
    def n(self) -> int:
        return region_dim(self.parts[0])


@dataclass(frozen=True, eq=False)
class HCap:
    """Closed metric ball on H^n."""

    center: geo.HyperPoint
    radius: float

    def __post_init__(self):
        r = float(self.radius)
        if not (r > 0.0 and math.isfinite(r)):
            raise InvalidRegionError(f"hyperbolic cap radius must be positive, got {r!r}")
        object.__setattr__(self, "radius", r)

    @property
    def n(self) -> int:
        return self.center.n


@dataclass(frozen=True, eq=False)
class HPolygon:
    """Geodesic polygon on H^2 with a simple boundary.

    Vertex order is canonicalized to counterclockwise.  Degenerate (zero-area)
    vertex loops are tolerated; they carry zero measure.
    """

    vertices: tuple

    def __post_init__(self):
        verts = tuple(self.vertices)
        if len(verts) < 3:
            raise InvalidRegionError("polygon needs at least 3 vertices")
        for v in verts:
            if not isinstance(v, geo.HyperPoint) or v.n != 2:
                raise InvalidRegionError("polygon vertices must be points of H^2")
        V = np.array([v.coords for v in verts])
        m = V.mean(axis=0)
        x0 = m / math.sqrt(-float(geo.lorentz_dot(m, m)))
        center = geo.HyperPoint(x0)
        frame = geo.tangent_frame(center)
        # Klein chart coordinates: project v/(-<x0,v>) - x0 onto the Lorentz frame
        K = -geo.lorentz_dot(V, x0)
        P = V / K[:, None] - x0
        chart = np.column_stack([geo.lorentz_dot(P, frame[0]), geo.lorentz_dot(P, frame[1])])
        area2 = _shoelace(chart)
        degenerate = abs(area2) < 1e-14
        if not degenerate and area2 < 0.0:
            verts = tuple(reversed(verts))
            chart = chart[::-1].copy()
        if not degenerate and not _polygon_is_simple(chart):
            raise InvalidRegionError("polygon boundary is not simple")
        chart.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "_chart_center", center)
        object.__setattr__(self, "_chart_frame", frame)
        object.__setattr__(self, "_chart_verts", chart)
        object.__setattr__(self, "_degenerate", degenerate)
        object.__setattr__(self, "_enc_cache", [None])

    @property
    def n(self) -> int:
        return 2


@dataclass(frozen=True, eq=False)
class HIntervalSet:
    """Disjoint geodesic-parameter intervals on H^1, points (sinh t, cosh t)."""

    intervals: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.intervals, dtype=float))
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
            raise InvalidRegionError("intervals must be an (m, 2) array")
        if not np.all(np.isfinite(arr)):
            raise InvalidRegionError("intervals must be finite")
        if np.any(arr[:, 0] >= arr[:, 1]):
            raise InvalidRegionError("each interval needs a < b")
        order = np.argsort(arr[:, 0])
        arr = arr[order]
        if np.any(arr[1:, 0] < arr[:-1, 1] - 1e-15):
            raise InvalidRegionError("intervals must be pairwise disjoint")
        arr.setflags(write=False)
        object.__setattr__(self, "intervals", arr)

    @property
    def n(self) -> int:
        return 1


def region_dim(r) -> int:
    if isinstance(r, (Cap, SphericalPolygon, RegionUnion,
                      HCap, HPolygon, HIntervalSet, HRegionUnion)):
        return r.n
    raise InvalidRegionError(f"not a region: {type(r).__name__}")


def region_manifold(r) -> str:
    if isinstance(r, (Cap, SphericalPolygon, RegionUnion)):
        return "sphere"
    if isinstance(r, (HCap, HPolygon, HIntervalSet, HRegionUnion)):
        return "hyperbolic"
    raise InvalidRegionError(f"not a region: {type(r).__name__}")


# ---------------------------------------------------------------------------
# membership

def _interval_params(pts: np.ndarray) -> np.ndarray:
    # geodesic parameter of (sinh t, cosh t) rows
    return np.log(np.maximum(pts[:, 1] + pts[:, 0], 1e-300))


def contains_mask(r, pts: np.ndarray) -> np.ndarray:
    """Vectorized membership for an (N, n+1) coordinate array."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[1] != region_dim(r) + 1:
        raise ValueError("point dimension does not match the region")
    if isinstance(r, Cap):
        return pts @ r.center.coords >= math.cos(r.radius) - 1e-12
    if isinstance(r, SphericalPolygon):
        x0 = r._chart_center.coords
        dots = pts @ x0
        ok = dots > 1e-9
        out = np.zeros(len(pts), dtype=bool)
        if np.any(ok):
            chart = (pts[ok] / dots[ok, None] - x0) @ r._chart_frame.T
            out[ok] = _points_in_planar_polygon(chart, r._chart_verts)
        return out
    if isinstance(r, (RegionUnion, HRegionUnion)):
        out = np.zeros(len(pts), dtype=bool)
        for p in r.parts:
            out |= contains_mask(p, pts)
        return out
    if isinstance(r, HCap):
        return -geo.lorentz_dot(pts, r.center.coords) <= math.cosh(r.radius) + 1e-12
    if isinstance(r, HPolygon):
        x0 = r._chart_center.coords
        K = -geo.lorentz_dot(pts, x0)
        P = pts / K[:, None] - x0
        chart = np.column_stack([geo.lorentz_dot(P, r._chart_frame[0]),
                                 geo.lorentz_dot(P, r._chart_frame[1])])
        return _points_in_planar_polygon(chart, r._chart_verts)
    if isinstance(r, HIntervalSet):
        t = _interval_params(pts)
        out = np.zeros(len(pts), dtype=bool)
        for a, b in r.intervals:
            out |= (t >= a - 1e-12) & (t <= b + 1e-12)
        return out
    raise InvalidRegionError(f"not a region: {type(r).__name__}")


def contains(r, y) -> bool:
    """True iff the point lies in the (closed) region."""
    coords = y.coords if isinstance(y, (geo.SpherePoint, geo.HyperPoint)) else np.asarray(y, float)
    return bool(contains_mask(r, coords[None, :])[0])


# ---------------------------------------------------------------------------
# measure

def _turning_angle_sum_sphere(verts) -> float:
    V = np.array([v.coords for v in verts])
    k = len(verts)
    total = 0.0
    for i in range(k):
        a, v, b = V[(i - 1) % k], V[i], V[(i + 1) % k]
        din = -(a - float(a @ v) * v)
        dout = b - float(b @ v) * v
        din = din / np.linalg.norm(din)
        dout = dout / np.linalg.norm(dout)
        total += math.atan2(float(np.cross(din, dout) @ v), float(din @ dout))
    return total


def _turning_angle_sum_hyp(verts, frame_of) -> float:
    V = np.array([v.coords for v in verts])
    k = len(verts)
    total = 0.0
    for i in range(k):
        a, v, b = V[(i - 1) % k], V[i], V[(i + 1) % k]
        x = verts[i]
        din = -(a + float(geo.lorentz_dot(x.coords, a)) * x.coords)
        dout = b + float(geo.lorentz_dot(x.coords, b)) * x.coords
        din = din / math.sqrt(max(float(geo.lorentz_dot(din, din)), 1e-300))
        dout = dout / math.sqrt(max(float(geo.lorentz_dot(dout, dout)), 1e-300))
        F = frame_of(x)
        ain = (float(geo.lorentz_dot(din, F[0])), float(geo.lorentz_dot(din, F[1])))
        aout = (float(geo.lorentz_dot(dout, F[0])), float(geo.lorentz_dot(dout, F[1])))
        total += math.atan2(ain[0] * aout[1] - ain[1] * aout[0], ain[0] * aout[0] + ain[1] * aout[1])
    return total


def measure(r) -> float:
    """Exact standard measure of the region (additive over union parts)."""
    if isinstance(r, Cap):
        return cap_measure(r.n, r.radius)
    if isinstance(r, SphericalPolygon):
        # Gauss-Bonnet with curvature +1: area = 2 pi - sum of turning angles
        return 2.0 * math.pi - _turning_angle_sum_sphere(r.vertices)
    if isinstance(r, (RegionUnion, HRegionUnion)):
        return float(sum(measure(p) for p in r.parts))
    if isinstance(r, HCap):
        return hcap_measure(r.n, r.radius)
    if isinstance(r, HPolygon):
        if r._degenerate:
            return 0.0
        # curvature -1: area = sum of turning angles - 2 pi
        return _turning_angle_sum_hyp(r.vertices, geo.tangent_frame) - 2.0 * math.pi
    if isinstance(r, HIntervalSet):
        return float(np.sum(r.intervals[:, 1] - r.intervals[:, 0]))
    raise InvalidRegionError(f"not a region: {type(r).__name__}")


# ---------------------------------------------------------------------------
# smallest enclosing cap (spherical)

def _support_elements(r):
    """(points (P, n+1), caps [(center, radius)]) whose cap cover covers r."""
    if isinstance(r, Cap):
        return np.zeros((0, r.n + 1)), [(r.center.coords, r.radius)]
    if isinstance(r, SphericalPolygon):
        return np.array([v.coords for v in r.vertices]), []
    if isinstance(r, RegionUnion):
        pts, caps = [], []
        for p in r.parts:
            a, b = _support_elements(p)
            pts.append(a)
            caps.extend(b)
        return np.vstack(pts), caps
    raise InvalidRegionError("enclosing caps are defined for spherical regions only")


def _farthest_support(c, pts, caps):
    best = -1.0
    target = None
    if len(pts):
        d = np.arccos(np.clip(pts @ c, -1.0, 1.0))
        i = int(np.argmax(d))
        best = float(d[i])
        target = pts[i]
    for ctr, rad in caps:
        d = float(np.arccos(np.clip(ctr @ c, -1.0, 1.0))) + rad
        if d > best:
            best = d
            # farthest point of the cap: extend the geodesic c -> ctr by rad
            u = ctr - float(ctr @ c) * c
            nu = float(np.linalg.norm(u))
            if nu < 1e-12:
                f = geo.tangent_frame(geo.SpherePoint(c))[0]
                target = math.cos(rad) * c + math.sin(rad) * f
            else:
                ang = min(d, math.pi)
                target = math.cos(ang) * c + math.sin(ang) * (u / nu)
    return best, target


def _enclosing_heuristic(pts, caps, iters=300):
    seed_pts = [pts] if len(pts) else []
    seed_pts += [ctr[None, :] for ctr, _ in caps]
    allpts = np.vstack(seed_pts)
    c = allpts.sum(axis=0)
    nc = float(np.linalg.norm(c))
    c = allpts[0] if nc < 1e-12 else c / nc
    radius, _ = _farthest_support(c, pts, caps)
    lam = max(radius / 2.0, 1e-3)
    for _ in range(iters):
        if lam < 1e-13:
            break
        _, target = _farthest_support(c, pts, caps)
        u = target - float(target @ c) * c
        nu = float(np.linalg.norm(u))
        if nu < 1e-15:
            break
        cand = math.cos(lam) * c + math.sin(lam) * (u / nu)
        cand /= np.linalg.norm(cand)
        rad_cand, _ = _farthest_support(cand, pts, caps)
        if rad_cand < radius:
            c, radius = cand, rad_cand
            lam *= 1.4
        else:
            lam *= 0.5
    return c, radius


def _enclosing_slsqp(pts, caps, c0, r0):
    dim = len(c0)
    z0 = np.concatenate([c0, [min(r0 + 1e-6, math.pi)]])
    cons = [{
        "type": "eq",
        "fun": lambda z: np.array([z[:dim] @ z[:dim] - 1.0]),
        "jac": lambda z: np.concatenate([2.0 * z[:dim], [0.0]])[None, :],
    }]
    if len(pts):
        cons.append({
            "type": "ineq",
            "fun": lambda z: pts @ z[:dim] - math.cos(min(z[dim], math.pi)),
            "jac": lambda z: np.hstack([pts, np.full((len(pts), 1), math.sin(min(z[dim], math.pi)))]),
        })
    for ctr, rad in caps:
        def f(z, ctr=ctr, rad=rad):
            return np.array([float(ctr @ z[:dim]) - math.cos(min(max(z[dim] - rad, 0.0), math.pi)),
                             z[dim] - rad])

        def jac(z, ctr=ctr, rad=rad):
            J = np.zeros((2, dim + 1))
            J[0, :dim] = ctr
            J[0, dim] = math.sin(min(max(z[dim] - rad, 0.0), math.pi))
            J[1, dim] = 1.0
            return J

        cons.append({"type": "ineq", "fun": f, "jac": jac})
    with _SLSQP_LOCK:
        res = _sciopt.minimize(
            lambda z: z[dim], z0,
            jac=lambda z: np.concatenate([np.zeros(dim), [1.0]]),
            constraints=cons, method="SLSQP",
            options={"maxiter": 300, "ftol": 1e-14},
        )
    c = res.x[:dim]
    nc = float(np.linalg.norm(c))
    if not res.success or nc < 0.5:
        return None
    return c / nc


def enclosing_cap(r) -> Cap:
    """Smallest spherical cap containing the region, radius certified to 1e-9.

    Raises not-in-open-hemisphere when the radius reaches pi/2 - 1e-9, which
    signals that no admissible tangent point exists for this region.
    """
    pts, caps = _support_elements(r)
    if len(pts) == 0 and len(caps) == 1:
        ctr, rad = caps[0]
        result = Cap(geo.SpherePoint(ctr), rad)
        _check_enclosing_radius(result.radius)
        return result
    # one cap may already swallow every other support element
    for ctr, rad in caps:
        ok = True
        if len(pts):
            ok = bool(np.all(np.arccos(np.clip(pts @ ctr, -1, 1)) <= rad + 1e-12))
        for c2, r2 in caps:
            if c2 is ctr:
                continue
            if float(np.arccos(np.clip(c2 @ ctr, -1, 1))) + r2 > rad + 1e-12:
                ok = False
                break
        if ok:
            result = Cap(geo.SpherePoint(ctr), rad)
            _check_enclosing_radius(result.radius)
            return result
    c_h, r_h = _enclosing_heuristic(pts, caps)
    c_s = _enclosing_slsqp(pts, caps, c_h, r_h)
    center, radius = c_h, r_h
    if c_s is not None:
        r_s, _ = _farthest_support(c_s, pts, caps)
        if r_s < radius:
            center, radius = c_s, r_s
    _check_enclosing_radius(radius)
    return Cap(geo.SpherePoint(center), radius)


def _check_enclosing_radius(radius):
    if radius >= math.pi / 2.0 - 1e-9:
        raise NotInOpenHemisphereError(
            f"smallest enclosing cap radius {radius:.9f} >= pi/2 - 1e-9; "
            "no admissible tangent point exists"
        )


# ---------------------------------------------------------------------------
# feasibility margin

def _edge_min_dot(x, a, b):
    """Minimum of x . gamma(t) along the minor arc from a to b."""
    cth = float(np.clip(a @ b, -1.0, 1.0))
    theta = math.acos(cth)
    pa, pb = float(x @ a), float(x @ b)
    best = min(pa, pb)
    if theta < 1e-14:
        return best
    s = math.atan2(pb - pa * cth, pa * math.sin(theta))
    if 0.0 < s < theta:
        val = (pa * math.sin(theta - s) + pb * math.sin(s)) / math.sin(theta)
        best = min(best, val)
    return best


def feasibility_margin(r, x: geo.SpherePoint) -> float:
    """min over the region of x . y, exact per variant.

    Positive iff the whole region lies in the open hemisphere around x, i.e.
    the central projection of the region onto the tangent plane at x is
    defined and bounded.
    """
    if region_manifold(r) != "sphere":
        raise InvalidRegionError("feasibility margins apply to spherical regions")
    if x.n != region_dim(r):
        raise ValueError("point dimension does not match the region")
    if isinstance(r, Cap):
        d = geo.dist_sphere(x, r.center)
        return math.cos(min(math.pi, d + r.radius))
    if isinstance(r, SphericalPolygon):
        xv = x.coords
        V = [v.coords for v in r.vertices]
        best = min(float(xv @ v) for v in V)
        k = len(V)
        for i in range(k):
            best = min(best, _edge_min_dot(xv, V[i], V[(i + 1) % k]))
        if contains(r, x.antipode()):
            best = -1.0
        return best
    if isinstance(r, RegionUnion):
        return min(feasibility_margin(p, x) for p in r.parts)
    raise InvalidRegionError(f"not a spherical region: {type(r).__name__}")


# ---------------------------------------------------------------------------
# sampling

def _invert_sin_cdf(m: int, a: float, u: np.ndarray) -> np.ndarray:
    """Radial inverse CDF for density sin^m on [0, a]."""
    if m == 0:
        return u * a
    if m == 1:
        return np.arccos(np.clip(1.0 - u * (1.0 - math.cos(a)), -1.0, 1.0))
    total = _sin_power_integral(m, a)
    grid = np.linspace(0.0, a, 4097)
    cdf = np.array([_sin_power_integral(m, t) for t in grid]) / total
    t = np.interp(u, cdf, grid)
    for _ in range(3):
        F = np.array([_sin_power_integral(m, ti) for ti in t]) / total
        dens = np.sin(t) ** m / total
        step = np.where(dens > 1e-30, (F - u) / np.maximum(dens, 1e-30), 0.0)
        t = np.clip(t - step, 0.0, a)
    return t


def _invert_sinh_cdf(m: int, a: float, u: np.ndarray) -> np.ndarray:
    if m == 0:
        return u * a
    if m == 1:
        return np.arccosh(np.maximum(1.0 + u * (math.cosh(a) - 1.0), 1.0))
    total = _sinh_power_integral(m, a)
    grid = np.linspace(0.0, a, 4097)
    cdf = np.array([_sinh_power_integral(m, t) for t in grid]) / total
    t = np.interp(u, cdf, grid)
    for _ in range(3):
        F = np.array([_sinh_power_integral(m, ti) for ti in t]) / total
        dens = np.sinh(t) ** m / total
        step = np.where(dens > 1e-30, (F - u) / np.maximum(dens, 1e-30), 0.0)
        t = np.clip(t - step, 0.0, a)
    return t


def _tangent_dirs_sphere(rng, center: np.ndarray, count: int) -> np.ndarray:
    z = rng.standard_normal((count, center.size))
    w = z - np.outer(z @ center, center)
    nw = np.linalg.norm(w, axis=1)
    bad = nw < 1e-12
    if np.any(bad):
        w[bad] = np.eye(center.size)[0] - center[0] * center
        nw = np.linalg.norm(w, axis=1)
    return w / nw[:, None]


def _tangent_dirs_hyp(rng, center: np.ndarray, count: int) -> np.ndarray:
    z = rng.standard_normal((count, center.size))
    w = z + np.outer(geo.lorentz_dot(z, center), center)
    nw = np.sqrt(np.maximum(geo.lorentz_dot(w, w), 1e-300))
    return w / nw[:, None]


def _sample_cap(rng, cap: Cap, count: int) -> np.ndarray:
    c = cap.center.coords
    t = _invert_sin_cdf(cap.n - 1, cap.radius, rng.random(count))
    dirs = _tangent_dirs_sphere(rng, c, count)
    y = np.cos(t)[:, None] * c + np.sin(t)[:, None] * dirs
    return y / np.linalg.norm(y, axis=1)[:, None]


def _sample_hcap(rng, cap: HCap, count: int) -> np.ndarray:
    c = cap.center.coords
    t = _invert_sinh_cdf(cap.n - 1, cap.radius, rng.random(count))
    dirs = _tangent_dirs_hyp(rng, c, count)
    y = np.cosh(t)[:, None] * c + np.sinh(t)[:, None] * dirs
    return y / np.sqrt(np.maximum(-geo.lorentz_dot(y, y), 1e-300))[:, None]


def _enclosing_hcap(r) -> HCap:
    """Any reasonably tight hyperbolic cap covering r (rejection proposals)."""
    if isinstance(r, HCap):
        return r
    if isinstance(r, HPolygon):
        if r._enc_cache[0] is None:
            c = r._chart_center
            rad = max(geo.dist_hyp(c, v) for v in r.vertices)
            r._enc_cache[0] = HCap(c, rad + 1e-9)
        return r._enc_cache[0]
    raise InvalidRegionError("no hyperbolic enclosing cap for this region type")


def _rejection_sample(rng, region, count, proposal_cap, sampler):
    out = []
    accepted = 0
    proposals = 0
    while accepted < count:
        batch = sampler(rng, proposal_cap, _REJECTION_BATCH)
        keep = batch[contains_mask(region, batch)]
        out.append(keep)
        accepted += len(keep)
        proposals += _REJECTION_BATCH
        if proposals >= 1_000_000 and accepted < 1e-4 * proposals:
            raise RejectionStallError(
                f"acceptance rate {accepted / proposals:.2e} below 1e-4 "
                f"after {proposals} proposals"
            )
    return np.vstack(out)[:count]


def _sample_region(rng, r, count: int) -> np.ndarray:
    if isinstance(r, Cap):
        return _sample_cap(rng, r, count)
    if isinstance(r, SphericalPolygon):
        if r._enc_cache[0] is None:
            r._enc_cache[0] = enclosing_cap(r)
        return _rejection_sample(rng, r, count, r._enc_cache[0], _sample_cap)
    if isinstance(r, (RegionUnion, HRegionUnion)):
        weights = np.array([measure(p) for p in r.parts])
        counts = rng.multinomial(count, weights / weights.sum())
        chunks = [_sample_region(rng, p, int(c)) for p, c in zip(r.parts, counts) if c > 0]
        pts = np.vstack(chunks)
        return pts[rng.permutation(count)]
    if isinstance(r, HCap):
        return _sample_hcap(rng, r, count)
    if isinstance(r, HPolygon):
        return _rejection_sample(rng, r, count, _enclosing_hcap(r), _sample_hcap)
    if isinstance(r, HIntervalSet):
        lengths = r.intervals[:, 1] - r.intervals[:, 0]
        edges = np.concatenate([[0.0], np.cumsum(lengths)])
        u = rng.random(count) * edges[-1]
        idx = np.searchsorted(edges, u, side="right") - 1
        idx = np.clip(idx, 0, len(lengths) - 1)
        t = r.intervals[idx, 0] + (u - edges[idx])
        return np.column_stack([np.sinh(t), np.cosh(t)])
    raise InvalidRegionError(f"not a region: {type(r).__name__}")


def sample(r, count: int, seed: int) -> np.ndarray:
    """(count, n+1) i.i.d. points uniform w.r.t. the region's standard measure.

    Deterministic for a fixed seed (counter-based Philox stream); caps are
    sampled by radial inverse-CDF, polygons by rejection from an enclosing cap.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    return _sample_region(rng, r, int(count))


# ---------------------------------------------------------------------------
# random ensembles

def _random_unit(rng, dim):
    while True:
        z = rng.standard_normal(dim)
        nz = float(np.linalg.norm(z))
        if nz > 1e-12:
            return z / nz


def _bisect_scalar(fn, lo, hi, target, tol=1e-11, iters=200):
    flo, fhi = fn(lo) - target, fn(hi) - target
    if flo > 0.0 or fhi < 0.0:
        return None
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid) - target
        if abs(fm) <= tol:
            return mid
        if fm > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _cap_union_region(rng, target_area, k, n, hyperbolic):
    meas = hcap_measure if hyperbolic else cap_measure
    spreads = [0.9, 1.3, 1.8, 2.4, math.pi - 0.05]
    if hyperbolic:
        spreads = [0.9, 1.5, 2.5, 4.0, 6.0]
    for spread in spreads:
        for _ in range(20):
            if hyperbolic:
                o = np.zeros(n + 1)
                o[-1] = 1.0
                base = geo.HyperPoint(o)
                offs = _invert_sinh_cdf(n - 1, spread, rng.random(k)) if k > 1 else np.zeros(1)
                dirs = _tangent_dirs_hyp(rng, base.coords, k)
                centers = [geo.exp_hyp(base, geo.TangentVec(base, offs[i] * dirs[i]))
                           for i in range(k)]
                dists = [[geo.dist_hyp(a, b) for b in centers] for a in centers]
            else:
                base = geo.SpherePoint(_random_unit(rng, n + 1))
                offs = _invert_sin_cdf(n - 1, spread, rng.random(k)) if k > 1 else np.zeros(1)
                dirs = _tangent_dirs_sphere(rng, base.coords, k)
                centers = [geo.exp_sphere(base, geo.TangentVec(base, offs[i] * dirs[i]))
                           for i in range(k)]
                dists = [[geo.dist_sphere(a, b) for b in centers] for a in centers]
            min_pair = min((dists[i][j] for i in range(k) for j in range(i + 1, k)), default=math.inf)
            r_hi = min(min_pair / 2.0 - 5e-3, 20.0 if hyperbolic else math.pi - 1e-3)
            if r_hi <= 1e-6 or k * meas(n, r_hi) < target_area:
                continue
            rad = _bisect_scalar(lambda t: k * meas(n, t), 1e-9, r_hi, target_area)
            if rad is None:
                continue
            if hyperbolic:
                caps = [HCap(c, rad) for c in centers]
            else:
                caps = [Cap(c, rad) for c in centers]
            if k == 1:
                return caps[0]
            return HRegionUnion(tuple(caps)) if hyperbolic else RegionUnion(tuple(caps))
    raise InfeasibleTargetError(
        f"could not place {k} disjoint caps with total measure {target_area:.6g}"
    )


def _perturbed_polygon_region(rng, target_area, k, hyperbolic):
    kv = max(int(k), 3)
    if hyperbolic and target_area > 0.8 * (kv - 2) * math.pi:
        kv = int(math.ceil(target_area / (0.8 * math.pi))) + 2
    for _ in range(100):
        if hyperbolic:
            o = geo.HyperPoint([0.0, 0.0, 1.0])
            off = rng.random() * 0.8
            c0 = geo.exp_hyp(o, geo.TangentVec(o, off * _tangent_dirs_hyp(rng, o.coords, 1)[0]))
        else:
            c0 = geo.SpherePoint(_random_unit(rng, 3))
        F = geo.tangent_frame(c0)
        phis = 2.0 * math.pi * np.arange(kv) / kv
        phis = phis + (rng.random(kv) - 0.5) * (2.0 * math.pi / kv) * 0.55
        rho = 1.0 + 0.25 * (2.0 * rng.random(kv) - 1.0)

        def build(s):
            verts = []
            for i in range(kv):
                d = math.cos(phis[i]) * F[0] + math.sin(phis[i]) * F[1]
                if hyperbolic:
                    verts.append(geo.exp_hyp(c0, geo.TangentVec(c0, s * rho[i] * d)))
                else:
                    verts.append(geo.exp_sphere(c0, geo.TangentVec(c0, s * rho[i] * d)))
            return HPolygon(tuple(verts)) if hyperbolic else SphericalPolygon(tuple(verts))

        s_hi = 6.0 / max(rho) if hyperbolic else 1.45 / max(rho)
        s_lo = 0.02 * s_hi
        try:
            if measure(build(s_hi)) < target_area:
                continue
            s = _bisect_scalar(lambda t: measure(build(t)), s_lo, s_hi, target_area)
            if s is None:
                continue
            return build(s)
        except InvalidRegionError:
            continue
    raise InfeasibleTargetError(
        f"could not build a perturbed polygon with measure {target_area:.6g}"
    )


def random_region(target_area: float, shape: str, k: int, seed: int, n: int = 2):
    """Seeded random spherical region whose measure matches target_area to 1e-9.

    shape "cap-union" places k disjoint caps with a common radius solved by
    bisection; "perturbed-polygon" jitters a regular geodesic k-gon and solves
    a global scale.  Raises infeasible-target after 100 seeded retries.
    """
    if target_area <= 0.0:
        raise InfeasibleTargetError("target area must be positive")
    if shape == "cap-union" and n == 2 and target_area >= 4.0 * math.pi:
        raise InfeasibleTargetError("target area exceeds the sphere")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    if shape == "cap-union":
        return _cap_union_region(rng, target_area, int(k), n, hyperbolic=False)
    if shape == "perturbed-polygon":
        if n != 2:
            raise InvalidRegionError("perturbed polygons are supported on S^2 only")
        return _perturbed_polygon_region(rng, target_area, k, hyperbolic=False)
    raise ValueError(f"unknown shape {shape!r}")


def random_hregion(target_area: float, shape: str, k: int, seed: int, n: int = 2):
    """Hyperbolic analog of random_region (shapes "cap-union", "perturbed-polygon")."""
    if target_area <= 0.0:
        raise InfeasibleTargetError("target area must be positive")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    if shape == "cap-union":
        return _cap_union_region(rng, target_area, int(k), n, hyperbolic=True)
    if shape == "perturbed-polygon":
        if n != 2:
            raise InvalidRegionError("perturbed polygons are supported on H^2 only")
        return _perturbed_polygon_region(rng, target_area, k, hyperbolic=True)
    raise ValueError(f"unknown shape {shape!r}")


# ---------------------------------------------------------------------------
# JSON schema

class _LineOracle:
    """Best-effort mapping from JSON keys to line numbers, in document order."""

    def __init__(self, text):
        self.lines = {}
        if text is None:
            return
        for ln, line in enumerate(text.splitlines(), start=1):
            for key in ("manifold", "n", "region", "type", "center", "radius",
                        "vertices", "parts", "intervals"):
                if f'"{key}"' in line:
                    self.lines.setdefault(key, []).append(ln)

    def take(self, key):
        entry = self.lines.get(key)
        if entry:
            return entry.pop(0)
        return None


def _fail(name, oracle, key, path, detail):
    line = oracle.take(key) if oracle else None
    where = f"{name}:{line}" if line else name
    raise InvalidRegionError(f"{where}: {detail} (at {path})")


def _coords_from(doc, n, name, oracle, key, path):
    if not isinstance(doc, list) or len(doc) != n + 1:
        _fail(name, oracle, key, path, f"expected a coordinate array of length {n + 1}")
    try:
        return [float(v) for v in doc]
    except (TypeError, ValueError):
        _fail(name, oracle, key, path, "coordinates must be numbers")


def _build_region(doc, manifold, n, name, oracle, path):
    if not isinstance(doc, dict) or "type" not in doc:
        _fail(name, oracle, "region", path, "region object must carry a \"type\"")
    kind = doc["type"]
    try:
        if kind == "cap":
            center = _coords_from(doc.get("center"), n, name, oracle, "center", path + ".center")
            radius = doc.get("radius")
            if manifold == "sphere":
                return Cap(geo.SpherePoint(center), float(radius))
            return HCap(geo.HyperPoint(center), float(radius))
        if kind == "polygon":
            raw = doc.get("vertices")
            if not isinstance(raw, list) or len(raw) < 3:
                _fail(name, oracle, "vertices", path + ".vertices", "polygon needs >= 3 vertices")
            verts = [_coords_from(v, n, name, oracle, "vertices", f"{path}.vertices[{i}]")
                     for i, v in enumerate(raw)]
            if manifold == "sphere":
                return SphericalPolygon(tuple(geo.SpherePoint(v) for v in verts))
            return HPolygon(tuple(geo.HyperPoint(v) for v in verts))
        if kind == "union":
            raw = doc.get("parts")
            if not isinstance(raw, list) or not raw:
                _fail(name, oracle, "parts", path + ".parts", "union needs a non-empty parts list")
            parts = [_build_region(p, manifold, n, name, oracle, f"{path}.parts[{i}]")
                     for i, p in enumerate(raw)]
            if manifold == "sphere":
                return RegionUnion(tuple(parts))
            return HRegionUnion(tuple(parts))
        if kind == "intervals":
            if manifold != "hyperbolic" or n != 1:
                _fail(name, oracle, "intervals", path, "interval sets live on H^1 only")
            return HIntervalSet(np.asarray(doc.get("intervals"), dtype=float))
    except (InvalidRegionError, ValueError, TypeError) as e:
        if isinstance(e, InvalidRegionError) and str(e).startswith(name):
            raise
        key = {"cap": "radius", "polygon": "vertices",
               "union": "parts", "intervals": "intervals"}.get(kind, "type")
        _fail(name, oracle, key, path, str(e))
    _fail(name, oracle, "type", path + ".type", f"unknown region type {kind!r}")


def parse_region(text: str, name: str = "region"):
    """Parse the JSON region schema, rejecting invariant violations with
    line-anchored messages."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidRegionError(f"{name}:{e.lineno}: {e.msg}") from None
    oracle = _LineOracle(text)
    return _region_from_doc(doc, name, oracle)


def _region_from_doc(doc, name, oracle):
    if not isinstance(doc, dict):
        _fail(name, oracle, "manifold", "$", "top-level document must be an object")
    manifold = doc.get("manifold")
    if manifold not in ("sphere", "hyperbolic"):
        _fail(name, oracle, "manifold", "$.manifold",
              'manifold must be "sphere" or "hyperbolic"')
    n = doc.get("n")
    if not isinstance(n, int) or n < 1:
        _fail(name, oracle, "n", "$.n", "n must be a positive integer")
    return _build_region(doc.get("region"), manifold, n, name, oracle, "$.region")


def region_from_json(doc: dict):
    """Build a region from an already-parsed JSON document."""
    return _region_from_doc(doc, "region", _LineOracle(None))


def load_region(path):
    p = Path(path)
    return parse_region(p.read_text(), name=str(p))


def region_to_json(r) -> dict:
    """Serialize a region into the JSON region schema."""
    def body(r):
        if isinstance(r, (Cap, HCap)):
            return {"type": "cap", "center": [float(v) for v in r.center.coords],
                    "radius": float(r.radius)}
        if isinstance(r, (SphericalPolygon, HPolygon)):
            return {"type": "polygon",
                    "vertices": [[float(c) for c in v.coords] for v in r.vertices]}
        if isinstance(r, (RegionUnion, HRegionUnion)):
            return {"type": "union", "parts": [body(p) for p in r.parts]}
        if isinstance(r, HIntervalSet):
            return {"type": "intervals",
                    "intervals": [[float(a), float(b)] for a, b in r.intervals]}
        raise InvalidRegionError(f"not a region: {type(r).__name__}")

    return {"manifold": region_manifold(r), "n": region_dim(r), "region": body(r)}


def dump_region(r, path):
    Path(path).write_text(json.dumps(region_to_json(r), indent=2) + "\n")
