"""The projected-area functionals and their derivatives.

For a spherical region the tangent point x must satisfy a feasibility margin
min_y x.y >= 1e-6 or the functional is treated as divergent (infeasible-point);
the functional genuinely blows up at the margin-zero boundary, so the cutoff
is a hard error rather than a clamp.

Exact fast paths: polygons project to Euclidean polygons (shoelace), caps on
S^2 to ellipses, and hyperbolic interval sets integrate in closed form; the
quadrature module covers everything else and doubles as the cross-check route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import geometry as geo
from . import projection as proj
from . import regions as reg
from .errors import InfeasiblePointError
from .quadrature import DEFAULT_SPEC, EvalResult, QuadratureSpec, integrate, integrate_vector

__all__ = [
    "MARGIN_FLOOR",
    "PotentialSpec",
    "area_functional",
    "gradient",
    "second_derivative_dir",
    "critical_residual",
    "potential_functional",
    "potential_gradient",
    "h_area_functional",
    "h_gradient",
    "h_critical_residual",
]

MARGIN_FLOOR = 1e-6


def _require_margin(r, x):
    margin = reg.feasibility_margin(r, x)
    if margin < MARGIN_FLOOR:
        raise InfeasiblePointError(
            f"tangent point margin {margin:.3g} below {MARGIN_FLOOR}; "
            "the projected area diverges near the admissibility boundary"
        )
    return margin


# ---------------------------------------------------------------------------
# potentials

@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Strictly monotone continuous profile f applied to geodesic distance.

    `f` (and optionally `fprime`) are vectorized callables on t >= 0.
    Monotonicity in the declared direction is spot-checked on a 10^3 grid.
    """

    f: object
    direction: str
    fprime: object = None
    name: str = "custom"

    def __post_init__(self):
        if self.direction not in ("increasing", "decreasing"):
            raise ValueError('direction must be "increasing" or "decreasing"')
        ts = np.linspace(0.0, 10.0, 1000)
        vals = np.asarray(self.f(ts), dtype=float)
        diffs = np.diff(vals)
        ok = np.all(diffs > 0.0) if self.direction == "increasing" else np.all(diffs < 0.0)
        if not ok:
            raise ValueError(f"profile is not strictly {self.direction} on [0, 10]")

    @staticmethod
    def power(p: float = 1.0) -> "PotentialSpec":
        return PotentialSpec(lambda t: np.power(t, p), "increasing",
                             fprime=lambda t: p * np.power(np.maximum(t, 1e-300), p - 1.0),
                             name=f"t^{p:g}")

    @staticmethod
    def exp_decay() -> "PotentialSpec":
        return PotentialSpec(lambda t: np.exp(-t), "decreasing",
                             fprime=lambda t: -np.exp(-t), name="exp(-t)")

    @staticmethod
    def log1p_growth() -> "PotentialSpec":
        return PotentialSpec(np.log1p, "increasing",
                             fprime=lambda t: 1.0 / (1.0 + t), name="log1p")

    @staticmethod
    def from_table(ts, vals) -> "PotentialSpec":
        """Monotone spline through tabulated samples (PCHIP preserves monotonicity)."""
        from scipy.interpolate import PchipInterpolator

        ts = np.asarray(ts, dtype=float)
        vals = np.asarray(vals, dtype=float)
        spline = PchipInterpolator(ts, vals, extrapolate=True)
        d = np.diff(vals)
        direction = "increasing" if np.all(d > 0) else "decreasing"
        return PotentialSpec(spline, direction, fprime=spline.derivative(), name="table")


# ---------------------------------------------------------------------------
# spherical functionals

def _exact_area(r, x):
    if isinstance(r, reg.Cap) and r.n == 2:
        return proj.cap_image_area(x, r)
    if isinstance(r, reg.SphericalPolygon):
        return proj.polygon_image_area(x, r)
    if isinstance(r, reg.RegionUnion):
        total = 0.0
        for p in r.parts:
            part = _exact_area(p, x)
            if part is None:
                return None
            total += part
        return total
    return None


def area_functional(r, x: geo.SpherePoint, q: QuadratureSpec = DEFAULT_SPEC) -> EvalResult:
    """Area of the central projection of the region onto the tangent plane at x.

    Uses the exact polygon/cap fast paths when the method is "auto" (err_est 0),
    otherwise the integral of (x.y)^-(n+1) over the region.
    """
    _require_margin(r, x)
    if q.method == "auto":
        exact = _exact_area(r, x)
        if exact is not None:
            return EvalResult(exact, 0.0, 0, "exact")
    n = r.n
    xv = x.coords
    return integrate(r, lambda pts: (pts @ xv) ** (-(n + 1)), q)


def _stationarity_vector(r, x, q):
    n = r.n
    xv = x.coords
    return integrate_vector(r, lambda pts: pts * ((pts @ xv) ** (-(n + 2)))[:, None], q)


def gradient(r, x: geo.SpherePoint, q: QuadratureSpec = DEFAULT_SPEC) -> geo.TangentVec:
    """Riemannian gradient of the projected area at x.

    -(n+1) times the tangential part of the first-moment integral
    int y (x.y)^-(n+2); vanishing exactly at stationary tangent points.
    """
    _require_margin(r, x)
    V = _stationarity_vector(r, x, q)
    return geo.project_tangent_sphere(x, -(r.n + 1) * V.value)


def second_derivative_dir(r, x: geo.SpherePoint, v: geo.TangentVec,
                          q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Second derivative of the projected area along the great circle through v.

    (n+1) int [(x.y)^2 + (n+2)(v.y)^2] / (x.y)^(n+3); a sum of squares, hence
    strictly positive on the admissible set, which is what pins the minimizer
    down to a single point.
    """
    _require_margin(r, x)
    if abs(v.norm() - 1.0) > 1e-9:
        raise ValueError("direction must be a unit tangent vector")
    n = r.n
    xv, vv = x.coords, v.vec

    def fn(pts):
        d = pts @ xv
        s = pts @ vv
        return (d * d + (n + 2) * s * s) * d ** (-(n + 3))

    return (n + 1) * integrate(r, fn, q).value


def critical_residual(r, x: geo.SpherePoint, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Norm of the stationarity defect int y (x.y)^-(n+2) - A(x) x.

    The radial component cancels identically (x . int y (x.y)^-(n+2) is A(x)
    itself), so the residual is the tangential defect, i.e. |gradient|/(n+1).
    """
    _require_margin(r, x)
    V = _stationarity_vector(r, x, q).value
    defect = V - float(x.coords @ V) * x.coords
    return float(np.linalg.norm(defect))


def _slice_angle(psi, alpha, t, hyperbolic):
    """Angular measure of the circle of radius t about x inside a cap whose
    center is psi away (n = 2); from the law of cosines in either geometry."""
    t = np.asarray(t, dtype=float)
    if hyperbolic:
        num = math.cosh(psi) * np.cosh(t) - math.cosh(alpha)
        den = math.sinh(psi) * np.sinh(t)
    else:
        num = math.cos(alpha) - math.cos(psi) * np.cos(t)
        den = math.sin(psi) * np.sin(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(np.abs(den) > 1e-300, num / np.where(den == 0.0, 1.0, den),
                     np.where(num > 0.0, np.inf, -np.inf))
    return 2.0 * np.arccos(np.clip(a, -1.0, 1.0))


def _gl_piece(fn_vec, a, b, rel_tol, scale_hint=1.0):
    """Vectorized 1-D integral on [a, b] under the substitution t = c + r sin(u).

    The substitution makes sqrt-type endpoint behavior (the arccos edges of
    the slice angle) analytic, so Gauss-Legendre with order doubling converges
    spectrally.  Returns (value, err, evals).
    """
    c = 0.5 * (a + b)
    r = 0.5 * (b - a)
    prev = None
    evals = 0
    order = 16
    while True:
        xg, wg = np.polynomial.legendre.leggauss(order)
        u = 0.5 * math.pi * xg
        t = c + r * np.sin(u)
        w = 0.5 * math.pi * r * np.cos(u) * wg
        val = float(w @ fn_vec(t))
        evals += order
        if prev is not None:
            err = abs(val - prev)
            if err <= rel_tol * max(abs(val), scale_hint * 1e-3, 1e-300) or order >= 2048:
                return val, err, evals
        prev = val
        order *= 2


def _cap_potential_radial(alpha, psi, p, rel_tol, hyperbolic):
    """Potential of a cap at radial offset psi, by exact 1-D slicing (n = 2).

    Robust to x inside the cap: the distance kink at y = x sits at a piece
    boundary of the 1-D integral instead of inside a 2-D rule.  Returns
    (value, err, evals).
    """
    if psi < 1e-12:
        # rotationally symmetric: full circles of radius t
        def g0(t):
            w = np.sinh(t) if hyperbolic else np.sin(t)
            return 2.0 * math.pi * np.asarray(p.f(t), dtype=float) * w

        return _gl_piece(g0, 0.0, alpha, rel_tol)
    tmax = psi + alpha if hyperbolic else min(math.pi, psi + alpha)
    cuts = {0.0, abs(psi - alpha), tmax}
    if not hyperbolic and psi + alpha > math.pi:
        cuts.add(max(0.0, 2.0 * math.pi - psi - alpha))
    pieces = sorted(c for c in cuts if 0.0 <= c <= tmax)

    def g(t):
        w = np.sinh(t) if hyperbolic else np.sin(t)
        theta = _slice_angle(psi, alpha, t, hyperbolic)
        return np.asarray(p.f(t), dtype=float) * w * theta

    total, err_total, evals = 0.0, 0.0, 0
    for a, b in zip(pieces, pieces[1:]):
        if b - a < 1e-15:
            continue
        val, err, k = _gl_piece(g, a, b, rel_tol)
        total += val
        err_total += err
        evals += k
    return total, err_total, evals


def _cap_potential_value(capr, x, p, rel_tol):
    hyperbolic = isinstance(capr, reg.HCap)
    psi = geo.dist_hyp(x, capr.center) if hyperbolic else geo.dist_sphere(x, capr.center)
    return _cap_potential_radial(capr.radius, psi, p, rel_tol, hyperbolic)


def _potential_parts(r):
    if isinstance(r, (reg.RegionUnion, reg.HRegionUnion)):
        return r.parts
    return (r,)


def potential_functional(r, x, p: PotentialSpec, q: QuadratureSpec = DEFAULT_SPEC) -> EvalResult:
    """Integral of f(dist(x, y)) over the region, either manifold.

    Caps on 2-manifolds integrate by exact radial slicing (the integrand's
    kink at y = x defeats fixed tensor rules when x is inside the region);
    interval sets and polygons go through the standard adaptive routes.
    """
    manifold = reg.region_manifold(r)
    xv = x.coords
    if manifold == "sphere":
        field = lambda pts: p.f(np.arccos(np.clip(pts @ xv, -1.0, 1.0)))
    else:
        field = lambda pts: p.f(np.arccosh(np.maximum(-geo.lorentz_dot(pts, xv), 1.0)))
    if q.method != "auto":
        return integrate(r, field, q)
    total, err_total, evals = 0.0, 0.0, 0
    for part in _potential_parts(r):
        if isinstance(part, (reg.Cap, reg.HCap)) and part.n == 2:
            v, e, k = _cap_potential_value(part, x, p, q.rel_tol)
        elif isinstance(part, reg.HCap) and part.n == 1:
            s_c = math.log(float(part.center.coords[1] + part.center.coords[0]))
            iv = reg.HIntervalSet(np.array([[s_c - part.radius, s_c + part.radius]]))
            res = integrate(iv, field, q)
            v, e, k = res.value, res.err_est, res.evals
        else:
            res = integrate(part, field, q)
            v, e, k = res.value, res.err_est, res.evals
        total += v
        err_total += e
        evals += k
    return EvalResult(total, err_total, evals, "potential")


def _cap_potential_gradient_vec(capr, x, p, rel_tol, h=1e-4):
    """Ambient gradient vector of a cap's potential: the value depends on x
    only through psi = dist(x, center), so differentiate the radial slice
    integral and point it along the geodesic away from the center."""
    hyperbolic = isinstance(capr, reg.HCap)
    psi = geo.dist_hyp(x, capr.center) if hyperbolic else geo.dist_sphere(x, capr.center)
    if psi < 1e-9:
        return np.zeros_like(x.coords)
    # the value depends on x through psi alone; differentiate radially
    vp = _cap_potential_radial(capr.radius, abs(psi + h), p, rel_tol, hyperbolic)[0]
    vm = _cap_potential_radial(capr.radius, abs(psi - h), p, rel_tol, hyperbolic)[0]
    dv = (vp - vm) / (2.0 * h)
    if hyperbolic:
        u = capr.center.coords + float(geo.lorentz_dot(x.coords, capr.center.coords)) * x.coords
        nu = math.sqrt(max(float(geo.lorentz_dot(u, u)), 1e-300))
    else:
        u = capr.center.coords - float(x.coords @ capr.center.coords) * x.coords
        nu = float(np.linalg.norm(u))
    if nu < 1e-15:
        return np.zeros_like(x.coords)
    return dv * (-u / nu)


def potential_gradient(r, x, p: PotentialSpec, q: QuadratureSpec = DEFAULT_SPEC) -> geo.TangentVec:
    """Riemannian gradient of the distance-potential functional.

    Cap parts on 2-manifolds use the radial-slice derivative; other parts use
    the profile-derivative integrand through the adaptive routes, or central
    differences of the functional when no derivative is available.
    """
    manifold = reg.region_manifold(r)
    sphere = manifold == "sphere"
    xv = x.coords
    total = np.zeros_like(xv)
    for part in _potential_parts(r):
        if isinstance(part, (reg.Cap, reg.HCap)) and part.n == 2:
            total = total + _cap_potential_gradient_vec(part, x, p, q.rel_tol)
            continue
        if p.fprime is None:
            g = _potential_gradient_fd(part, x, p, q)
            total = total + g.vec
            continue
        if sphere:
            def F(pts):
                d = np.clip(pts @ xv, -1.0, 1.0)
                t = np.arccos(d)
                s = np.sqrt(np.maximum(1.0 - d * d, 0.0))  # sin(dist) = |P_x y|
                w = np.where(s > 1e-14,
                             np.asarray(p.fprime(t), dtype=float) / np.maximum(s, 1e-14), 0.0)
                tang = pts - d[:, None] * xv
                return -w[:, None] * tang
        else:
            def F(pts):
                K = np.maximum(-geo.lorentz_dot(pts, xv), 1.0)
                t = np.arccosh(K)
                s = np.sqrt(np.maximum(K * K - 1.0, 0.0))  # sinh(dist)
                w = np.where(s > 1e-14,
                             np.asarray(p.fprime(t), dtype=float) / np.maximum(s, 1e-14), 0.0)
                tang = pts + geo.lorentz_dot(pts, xv)[:, None] * xv
                return -w[:, None] * tang

        total = total + integrate_vector(part, F, q).value
    if sphere:
        return geo.project_tangent_sphere(x, total)
    return geo.project_tangent_hyp(x, total)


def _potential_gradient_fd(r, x, p, q, h=1e-6):
    frame = geo.tangent_frame(x)
    sphere = reg.region_manifold(r) == "sphere"
    comps = []
    for f in frame:
        tv = geo.TangentVec(x, h * f)
        tv_m = geo.TangentVec(x, -h * f)
        if sphere:
            a = potential_functional(r, geo.exp_sphere(x, tv), p, q).value
            b = potential_functional(r, geo.exp_sphere(x, tv_m), p, q).value
        else:
            a = potential_functional(r, geo.exp_hyp(x, tv), p, q).value
            b = potential_functional(r, geo.exp_hyp(x, tv_m), p, q).value
        comps.append((a - b) / (2.0 * h))
    vec = np.asarray(comps) @ frame
    if sphere:
        return geo.project_tangent_sphere(x, vec)
    return geo.project_tangent_hyp(x, vec)


# ---------------------------------------------------------------------------
# hyperbolic functionals

def _interval_set_area(r: reg.HIntervalSet, x: geo.HyperPoint) -> float:
    # closed form: the H^1 integrand sech^2(s - t) has antiderivative -tanh(s - t)
    s = math.log(float(x.coords[1] + x.coords[0]))
    total = 0.0
    for a, b in r.intervals:
        total += math.tanh(s - a) - math.tanh(s - b)
    return total


def h_area_functional(r, x: geo.HyperPoint, q: QuadratureSpec = DEFAULT_SPEC) -> EvalResult:
    """Area of the Klein-chart projection of a hyperbolic region at x.

    Defined for every x (the integrand (-<x,y>)^-(n+1) is at most 1); exact
    shoelace path for polygons, tanh differences for interval sets.
    """
    if q.method == "auto":
        if isinstance(r, reg.HPolygon):
            return EvalResult(proj.hyp_polygon_image_area(x, r), 0.0, 0, "exact")
        if isinstance(r, reg.HIntervalSet):
            return EvalResult(_interval_set_area(r, x), 0.0, 0, "exact")
    n = r.n
    xv = x.coords
    return integrate(r, lambda pts: np.maximum(-geo.lorentz_dot(pts, xv), 1.0) ** (-(n + 1)), q)


def _h_stationarity_vector(r, x, q):
    n = r.n
    xv = x.coords
    return integrate_vector(
        r, lambda pts: pts * (np.maximum(-geo.lorentz_dot(pts, xv), 1.0) ** (-(n + 2)))[:, None], q
    )


def h_gradient(r, x: geo.HyperPoint, q: QuadratureSpec = DEFAULT_SPEC) -> geo.TangentVec:
    """Riemannian gradient of the hyperbolic projected area (ascent direction)."""
    W = _h_stationarity_vector(r, x, q).value
    return geo.project_tangent_hyp(x, (r.n + 1) * W)


def h_critical_residual(r, x: geo.HyperPoint, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Norm of the hyperbolic stationarity defect (tangent-metric norm)."""
    W = _h_stationarity_vector(r, x, q).value
    defect = W + float(geo.lorentz_dot(x.coords, W)) * x.coords
    return math.sqrt(max(float(geo.lorentz_dot(defect, defect)), 0.0))
