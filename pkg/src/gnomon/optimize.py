"""Extremal tangent-point search.

Riemannian gradient descent with Armijo backtracking: the spherical projected
area has a strictly positive second derivative along every great circle inside
the admissible set, so plain descent from any feasible start reaches the one
minimizer; infeasible trial steps are rejected outright (the functional is its
own barrier, but quadrature cannot follow it to the boundary, hence the
explicit margin floor).  The hyperbolic maximizer need not be unique, so the
search multi-starts from seeded region samples and deduplicates, reporting
whatever set of maxima it finds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import functional as fn
from . import geometry as geo
from . import regions as reg
from .errors import (
    MaxItersExceededError,
    NoAdmissiblePointError,
    NotInOpenHemisphereError,
)
from .quadrature import DEFAULT_SPEC, QuadratureSpec

__all__ = ["OptimizerOpts", "CriticalPoint", "ConvexityReport",
           "minimize_sphere", "maximize_hyperbolic", "verify_convexity"]


@dataclass(frozen=True)
class OptimizerOpts:
    grad_tol: float = 1e-9          # relative to max(|A|, 1)
    max_iters: int = 500
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    init_step: float | None = None  # default: 0.1 x enclosing-cap radius
    starts: int = 8                 # hyperbolic multi-start count
    dedupe_dist: float = 1e-4
    feasibility_floor: float = 1e-6

    def __post_init__(self):
        if not (0.0 < self.armijo_c1 < 1.0):
            raise ValueError("armijo_c1 must be in (0, 1)")
        if not (0.0 < self.backtrack < 1.0):
            raise ValueError("backtrack must be in (0, 1)")
        for name in ("grad_tol", "dedupe_dist", "feasibility_floor"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters < 1 or self.starts < 1:
            raise ValueError("max_iters and starts must be >= 1")


DEFAULT_OPTS = OptimizerOpts()


@dataclass(frozen=True)
class CriticalPoint:
    location: geo.SpherePoint | geo.HyperPoint
    value: float
    grad_norm: float
    residual: float
    kind: str
    iterations: int
    history: tuple = field(default=(), repr=False)

    def to_json(self):
        return {
            "location": [float(v) for v in self.location.coords],
            "value": float(self.value),
            "grad_norm": float(self.grad_norm),
            "residual": float(self.residual),
            "kind": self.kind,
            "iterations": int(self.iterations),
        }


def _descend(x0, value_fn, grad_fn, exp_fn, feasible_fn, opts, t0, t_max, maximize=False):
    """Armijo-backtracked geodesic descent; returns (x, value, grad, grad_norm,
    iters, converged, history of accepted values)."""
    x = x0
    fx = value_fn(x)
    history = [fx]
    t = max(t0, 1e-12)
    g = grad_fn(x)
    iters = 0
    for iters in range(opts.max_iters):
        gn = g.norm()
        if gn <= opts.grad_tol * max(abs(fx), 1.0):
            return x, fx, g, gn, iters, True, history
        sgn = 1.0 if maximize else -1.0
        d = (sgn / gn) * g.vec
        tt = t
        accepted = False
        while tt >= 1e-16:
            xn = exp_fn(x, geo.TangentVec(x, tt * d))
            if feasible_fn(xn):
                fxn = value_fn(xn)
                improve = (fxn - fx) if maximize else (fx - fxn)
                if improve >= opts.armijo_c1 * tt * gn:
                    accepted = True
                    break
            tt *= opts.backtrack
        if not accepted:
            # sufficient decrease is no longer certifiable at float resolution;
            # the caller polishes from here on the gradient norm instead
            return x, fx, g, gn, iters, False, history
        x, fx = xn, fxn
        history.append(fx)
        t = min(tt / opts.backtrack, t_max)
        g = grad_fn(x)
    g = grad_fn(x)
    gn = g.norm()
    converged = gn <= opts.grad_tol * max(abs(fx), 1.0)
    return x, fx, g, gn, opts.max_iters, converged, history


def _polish(x, g, gn, grad_fn, exp_fn, feasible_fn, tol, sphere, max_newton=15):
    """Drive the gradient norm below tol by Newton on the stationarity system.

    Used after the Armijo phase bottoms out at float resolution of the value:
    the gradient (tightly quadratured) stays measurable far below that scale,
    so we solve grad = 0 in chart coordinates with a finite-difference
    Jacobian and a norm-decrease damping guard.
    """
    def comps(frame, vec):
        if sphere:
            return frame @ vec
        return np.array([float(geo.lorentz_dot(f, vec)) for f in frame])

    steps = 0
    delta = 1e-5
    for steps in range(1, max_newton + 1):
        if gn <= tol:
            return x, g, gn, steps - 1
        frame = geo.tangent_frame(x)
        G0 = comps(frame, g.vec)
        J = np.empty((len(frame), len(frame)))
        for j, f in enumerate(frame):
            xj = exp_fn(x, geo.TangentVec(x, delta * f))
            J[:, j] = (comps(frame, grad_fn(xj).vec) - G0) / delta
        try:
            du = np.linalg.solve(J, -G0)
        except np.linalg.LinAlgError:
            du = np.linalg.lstsq(J, -G0, rcond=None)[0]
        improved = False
        for _ in range(12):
            cand = exp_fn(x, geo.TangentVec(x, du @ frame))
            if feasible_fn(cand):
                gc = grad_fn(cand)
                gcn = gc.norm()
                if gcn < gn:
                    x, g, gn = cand, gc, gcn
                    improved = True
                    break
            du = 0.5 * du
        if not improved:
            break
    return x, g, gn, steps


def _sphere_centroid(samples):
    m = samples.mean(axis=0)
    nm = float(np.linalg.norm(m))
    return None if nm < 1e-9 else geo.SpherePoint(m / nm)


def _hyp_centroid(samples):
    m = samples.mean(axis=0)
    return geo.HyperPoint(m / math.sqrt(-float(geo.lorentz_dot(m, m))))


def minimize_sphere(r, q: QuadratureSpec = DEFAULT_SPEC,
                    o: OptimizerOpts = DEFAULT_OPTS, start=None) -> CriticalPoint:
    """Locate the unique minimizer of the projected area over admissible x.

    Starts at the normalized centroid of 10^3 region samples when feasible,
    else at the enclosing-cap center; every iterate keeps a feasibility margin
    of at least o.feasibility_floor.  Raises no-admissible-point when the
    region fills a closed hemisphere (or margins cannot reach the floor), and
    max-iters-exceeded (carrying the best iterate) on a failed search.
    """
    try:
        enc = reg.enclosing_cap(r)
    except NotInOpenHemisphereError as e:
        raise NoAdmissiblePointError(str(e)) from None

    floor = o.feasibility_floor

    def feasible(x):
        return reg.feasibility_margin(r, x) >= floor

    if start is None:
        start = _sphere_centroid(reg.sample(r, 1000, q.seed))
        if start is None or not feasible(start):
            start = enc.center
        if not feasible(start):
            raise NoAdmissiblePointError(
                "no starting point reaches the feasibility floor "
                f"{floor} (enclosing radius {enc.radius:.6f})"
            )
    elif not feasible(start):
        raise NoAdmissiblePointError("the supplied start violates the feasibility floor")

    q_grad = replace(q, rel_tol=min(q.rel_tol, o.grad_tol))
    # the polish phase needs gradients whose quadrature noise sits well under
    # the termination threshold
    q_tight = replace(q, rel_tol=min(q.rel_tol, o.grad_tol / (10.0 * (r.n + 2))))
    q_val = replace(q, rel_tol=min(q.rel_tol, 1e-12))

    t0 = o.init_step if o.init_step is not None else 0.1 * enc.radius
    x, fx, g, gn, iters, converged, history = _descend(
        start,
        value_fn=lambda p: fn.area_functional(r, p, q_val).value,
        grad_fn=lambda p: fn.gradient(r, p, q_grad),
        exp_fn=geo.exp_sphere,
        feasible_fn=feasible,
        opts=o,
        t0=t0,
        t_max=math.pi / 2.0,
    )
    if not converged:
        tol = o.grad_tol * max(abs(fx), 1.0)
        g = fn.gradient(r, x, q_tight)
        x, g, gn, extra = _polish(
            x, g, g.norm(), lambda p: fn.gradient(r, p, q_tight),
            geo.exp_sphere, feasible, tol, sphere=True)
        iters += extra
        fx = fn.area_functional(r, x, q_val).value
        converged = gn <= tol
    residual = fn.critical_residual(r, x, q_tight)
    point = CriticalPoint(x, fx, gn, residual, "minimum", iters, tuple(history))
    if not converged and gn > 10.0 * o.grad_tol * max(abs(fx), 1.0):
        raise MaxItersExceededError(
            f"descent did not converge in {o.max_iters} iterations "
            f"(grad norm {gn:.3g})", best=point)
    return point


def _local_max_probe(r, x, value, q, step=1e-3):
    """Best probing direction if some nearby value beats `value`, else None."""
    frame = geo.tangent_frame(x)
    best = None
    best_val = value
    for f in frame:
        for s in (step, -step):
            xp = geo.exp_hyp(x, geo.TangentVec(x, s * f))
            vp = fn.h_area_functional(r, xp, q).value
            if vp > best_val + 1e-12 * max(1.0, abs(value)):
                best, best_val = xp, vp
    return best


def maximize_hyperbolic(r, q: QuadratureSpec = DEFAULT_SPEC,
                        o: OptimizerOpts = DEFAULT_OPTS) -> list:
    """Gradient-ascent maximizers of the hyperbolic projected area.

    Runs o.starts seeded ascents (region samples plus the normalized sample
    centroid), filters converged points that fail a local-maximality probe
    (saddles of symmetric regions), deduplicates within o.dedupe_dist and
    returns CriticalPoints sorted by value, best first.  There is no claim
    that every maximizer is found.
    """
    samples = reg.sample(r, max(256, o.starts), q.seed)
    starts = [_hyp_centroid(samples)]
    idx = np.linspace(0, len(samples) - 1, max(o.starts - 1, 1)).astype(int)
    starts.extend(geo.HyperPoint(samples[i]) for i in idx)
    starts = starts[: max(o.starts, 1)]

    q_grad = replace(q, rel_tol=min(q.rel_tol, o.grad_tol))
    q_tight = replace(q, rel_tol=min(q.rel_tol, o.grad_tol / (10.0 * (r.n + 2))))
    q_val = replace(q, rel_tol=min(q.rel_tol, 1e-12))
    value_fn = lambda p: fn.h_area_functional(r, p, q_val).value
    grad_fn = lambda p: fn.h_gradient(r, p, q_grad)
    grad_tight = lambda p: fn.h_gradient(r, p, q_tight)

    extent = max(geo.dist_hyp(starts[0], geo.HyperPoint(s)) for s in samples)
    t0 = o.init_step if o.init_step is not None else max(0.1 * extent, 0.05)

    def ascend(x0):
        x, fx, g, gn, iters, converged, history = _descend(
            x0, value_fn, grad_fn, geo.exp_hyp, lambda _: True,
            o, t0=t0, t_max=5.0, maximize=True)
        if not converged:
            tol = o.grad_tol * max(abs(fx), 1.0)
            g = grad_tight(x)
            x, g, gn, extra = _polish(x, g, g.norm(), grad_tight, geo.exp_hyp,
                                      lambda _: True, tol, sphere=False)
            iters += extra
            fx = value_fn(x)
            converged = gn <= tol
        return x, fx, gn, iters, converged, history

    found = []
    failures = 0
    for x0 in starts:
        x, fx, gn, iters, converged, history = ascend(x0)
        if not converged and gn > 10.0 * o.grad_tol * max(abs(fx), 1.0):
            failures += 1
            continue
        # escape saddles/minima of symmetric regions: probe, then re-ascend once
        better = _local_max_probe(r, x, fx, q_val)
        if better is not None:
            x, fx, gn, iters2, converged, history = ascend(better)
            iters += iters2
            if (not converged and gn > 10.0 * o.grad_tol * max(abs(fx), 1.0)) \
                    or _local_max_probe(r, x, fx, q_val) is not None:
                failures += 1
                continue
        residual = fn.h_critical_residual(r, x, q_tight)
        found.append(CriticalPoint(x, fx, gn, residual, "maximum", iters, tuple(history)))
    if not found:
        raise MaxItersExceededError(
            f"all {len(starts)} ascent starts failed ({failures} failures)")
    found.sort(key=lambda cp: -cp.value)
    unique = []
    for cp in found:
        if all(geo.dist_hyp(cp.location, u.location) > o.dedupe_dist for u in unique):
            unique.append(cp)
    return unique


@dataclass(frozen=True)
class ConvexityReport:
    samples: int
    min_second_derivative: float
    all_positive: bool
    multistart_count: int
    max_pairwise_distance: float
    unique_minimizer: bool
    minimizer_value: float
    max_residual: float

    @property
    def passed(self) -> bool:
        return self.all_positive and self.unique_minimizer

    def to_json(self):
        return {
            "samples": self.samples,
            "min_second_derivative": self.min_second_derivative,
            "all_positive": self.all_positive,
            "multistart_count": self.multistart_count,
            "max_pairwise_distance": self.max_pairwise_distance,
            "unique_minimizer": self.unique_minimizer,
            "minimizer_value": self.minimizer_value,
            "max_residual": self.max_residual,
        }


def sample_feasible_points(r, count, seed, margin=1e-4):
    """Seeded admissible tangent points for the region (margin at least `margin`)."""
    enc = reg.enclosing_cap(r)
    zone = max(math.pi / 2.0 - enc.radius - 1e-3, 1e-3)
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    proposal = reg.Cap(enc.center, zone)
    out = []
    guard = 0
    while len(out) < count:
        batch = reg._sample_region(rng, proposal, 64)
        for row in batch:
            x = geo.SpherePoint(row)
            if reg.feasibility_margin(r, x) >= margin:
                out.append(x)
                if len(out) == count:
                    break
        guard += 1
        if guard > 200:
            raise NoAdmissiblePointError("could not sample feasible tangent points")
    return out


def verify_convexity(r, samples: int = 100, seed: int = 0,
                     q: QuadratureSpec = DEFAULT_SPEC,
                     o: OptimizerOpts = DEFAULT_OPTS) -> ConvexityReport:
    """Check strict positivity of the directional second derivative on seeded
    feasible (point, direction) pairs, and that 8 distinct feasible starts all
    descend to the same minimizer (pairwise geodesic distance <= 1e-6)."""
    q_d2 = replace(q, rel_tol=min(q.rel_tol, 1e-7))
    pts = sample_feasible_points(r, samples, seed)
    rng = np.random.Generator(np.random.Philox(key=int(seed) + 1))
    min_d2 = math.inf
    for x in pts:
        z = rng.standard_normal(x.coords.size)
        v = geo.project_tangent_sphere(x, z)
        nv = v.norm()
        if nv < 1e-12:
            v = geo.TangentVec(x, geo.tangent_frame(x)[0])
            nv = 1.0
        v = v.scaled(1.0 / nv)
        min_d2 = min(min_d2, fn.second_derivative_dir(r, x, v, q_d2))
    starts = sample_feasible_points(r, 8, seed + 2, margin=max(1e-4, o.feasibility_floor))
    minima = [minimize_sphere(r, q, o, start=s) for s in starts]
    dmax = max(geo.dist_sphere(a.location, b.location)
               for i, a in enumerate(minima) for b in minima[i + 1:]) if len(minima) > 1 else 0.0
    return ConvexityReport(
        samples=samples,
        min_second_derivative=float(min_d2),
        all_positive=bool(min_d2 > 0.0),
        multistart_count=len(minima),
        max_pairwise_distance=float(dmax),
        unique_minimizer=bool(dmax <= 1e-6),
        minimizer_value=float(min(m.value for m in minima)),
        max_residual=float(max(m.residual for m in minima)),
    )
