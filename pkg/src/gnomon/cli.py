"""Command-line surface: evaluation, optimization, disc comparisons, the
built-in verification suite, and grid emission for external plotting.

Exit codes: 0 success, 1 parse/validation, 2 infeasibility, 3 numerical
failure, 4 verification failure.  Errors are emitted to stderr as one JSON
object {"error": code, "detail": ...}.  All output is deterministic for a
fixed seed, independent of --threads.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import compare as cmp
from . import functional as fn
from . import geometry as geo
from . import optimize as opt
from . import projection as proj
from . import regions as reg
from .errors import GnomonError
from .quadrature import QuadratureSpec, integrate

_QUAD_NAMES = {"auto": "auto", "cap": "cap-tensor",
               "polygon": "polygon-adaptive", "mc": "monte-carlo"}


def build_parser():
    p = argparse.ArgumentParser(
        prog="gnomon",
        description="Projected-area extremals of the central projection on "
                    "spheres and hyperbolic space.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_region=True):
        if needs_region:
            sp.add_argument("--region", required=True, help="region JSON file")
        sp.add_argument("--quad", choices=sorted(_QUAD_NAMES), default="auto")
        sp.add_argument("--rel-tol", type=float, default=1e-8)
        sp.add_argument("--mc-samples", type=int, default=1_000_000)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--max-evals", type=int, default=100_000_000)
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--format", choices=["json", "csv"], default="json")
        sp.add_argument("--threads", type=int, default=1)

    def opt_flags(sp):
        sp.add_argument("--grad-tol", type=float, default=1e-9)
        sp.add_argument("--max-iters", type=int, default=500)
        sp.add_argument("--starts", type=int, default=8)

    sp = sub.add_parser("eval", help="projected area at a tangent point")
    common(sp)
    sp.add_argument("--point", required=True, help="inline JSON coordinate array")

    sp = sub.add_parser("grad", help="Riemannian gradient at a tangent point")
    common(sp)
    sp.add_argument("--point", required=True)

    sp = sub.add_parser("optimize", help="unique spherical minimizer")
    common(sp)
    opt_flags(sp)

    sp = sub.add_parser("hyp-optimize", help="hyperbolic maximizers (multi-start)")
    common(sp)
    opt_flags(sp)

    sp = sub.add_parser("compare-disc", help="extremum vs. the area-matched cap")
    common(sp)
    opt_flags(sp)
    sp.add_argument("--potential", choices=["none", "t", "t2", "exp-neg-t"],
                    default="none", help="distance profile; none = projected area")

    sp = sub.add_parser("verify", help="run the built-in invariant suite")
    common(sp, needs_region=False)

    sp = sub.add_parser("grid", help="CSV grid of the projected area")
    common(sp)
    sp.add_argument("--res", type=int, default=64)
    return p


def _quad_spec(args) -> QuadratureSpec:
    return QuadratureSpec(method=_QUAD_NAMES[args.quad], rel_tol=args.rel_tol,
                          mc_samples=args.mc_samples, seed=args.seed,
                          max_evals=args.max_evals)


def _opt_spec(args) -> opt.OptimizerOpts:
    return opt.OptimizerOpts(grad_tol=args.grad_tol, max_iters=args.max_iters,
                             starts=args.starts)


def _parse_point(text, region):
    coords = np.asarray(json.loads(text), dtype=float)
    if reg.region_manifold(region) == "sphere":
        return geo.SpherePoint(coords)
    return geo.HyperPoint(coords)


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_dump(obj) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# commands

def _cmd_eval(args):
    region = reg.load_region(args.region)
    x = _parse_point(args.point, region)
    q = _quad_spec(args)
    if reg.region_manifold(region) == "sphere":
        res = fn.area_functional(region, x, q)
    else:
        res = fn.h_area_functional(region, x, q)
    _emit(_json_dump({"value": res.value, "err_est": res.err_est,
                      "evals": res.evals, "method": res.method_used}), args.out)
    return 0


def _cmd_grad(args):
    region = reg.load_region(args.region)
    x = _parse_point(args.point, region)
    q = _quad_spec(args)
    if reg.region_manifold(region) == "sphere":
        g = fn.gradient(region, x, q)
    else:
        g = fn.h_gradient(region, x, q)
    _emit(_json_dump({"base": [float(v) for v in x.coords],
                      "vector": [float(v) for v in g.vec],
                      "norm": g.norm()}), args.out)
    return 0


def _cmd_optimize(args):
    region = reg.load_region(args.region)
    cp = opt.minimize_sphere(region, _quad_spec(args), _opt_spec(args))
    _emit(_json_dump([cp.to_json()]), args.out)
    return 0


def _cmd_hyp_optimize(args):
    region = reg.load_region(args.region)
    cps = opt.maximize_hyperbolic(region, _quad_spec(args), _opt_spec(args))
    _emit(_json_dump([cp.to_json() for cp in cps]), args.out)
    return 0


_POTENTIALS = {
    "t": lambda: fn.PotentialSpec.power(1.0),
    "t2": lambda: fn.PotentialSpec.power(2.0),
    "exp-neg-t": fn.PotentialSpec.exp_decay,
}


def _cmd_compare(args):
    region = reg.load_region(args.region)
    q = _quad_spec(args)
    rid = Path(args.region).stem
    if args.potential != "none":
        report = cmp.compare_potential(region, _POTENTIALS[args.potential](), q,
                                       region_id=rid)
    elif reg.region_manifold(region) == "sphere":
        report = cmp.compare_sphere_min(region, q, _opt_spec(args), region_id=rid)
    else:
        report = cmp.compare_hyperbolic_max(region, q, _opt_spec(args), region_id=rid)
    _emit(_json_dump(report.to_json()), args.out)
    return 0


def _cmd_grid(args):
    region = reg.load_region(args.region)
    q = _quad_spec(args)
    res = max(2, args.res)
    lines = ["# projected-area grid; theta,phi in radians (sphere: polar/azimuth;"
             " hyperbolic: geodesic polar radius/angle); feasible=0 rows leave A empty",
             "theta,phi,A,feasible"]
    manifold = reg.region_manifold(region)
    n = reg.region_dim(region)
    if manifold == "sphere":
        if n != 2:
            raise GnomonError("grids are emitted for S^2 regions only")
        thetas = np.linspace(0.0, math.pi, res)
        phis = 2.0 * math.pi * np.arange(res) / res
        for t in thetas:
            for ph in phis:
                x = geo.SpherePoint([math.sin(t) * math.cos(ph),
                                     math.sin(t) * math.sin(ph), math.cos(t)])
                if reg.feasibility_margin(region, x) >= fn.MARGIN_FLOOR:
                    a = fn.area_functional(region, x, q).value
                    lines.append(f"{t:.17g},{ph:.17g},{a:.17g},1")
                else:
                    lines.append(f"{t:.17g},{ph:.17g},,0")
    else:
        center = opt._hyp_centroid(reg.sample(region, 256, q.seed))
        frame = geo.tangent_frame(center)
        radii = np.linspace(0.0, 5.0, res)
        phis = 2.0 * math.pi * np.arange(res) / res if n == 2 else np.array([0.0, math.pi])
        for s in radii:
            for ph in phis:
                d = math.cos(ph) * frame[0] + (math.sin(ph) * frame[1] if n == 2 else 0.0)
                x = geo.exp_hyp(center, geo.TangentVec(center, s * d))
                a = fn.h_area_functional(region, x, q).value
                lines.append(f"{s:.17g},{ph:.17g},{a:.17g},1")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------
# verify suite

def _fixture_cap():
    return reg.Cap(geo.SpherePoint([0.0, 0.0, 1.0]), 0.8)


def _fixture_union():
    z = geo.SpherePoint([0.0, 0.0, 1.0])
    f = geo.tangent_frame(z)
    c1 = geo.exp_sphere(z, geo.TangentVec(z, 0.5 * f[0]))
    c2 = geo.exp_sphere(z, geo.TangentVec(z, -0.5 * f[0]))
    return reg.RegionUnion((reg.Cap(c1, 0.3), reg.Cap(c2, 0.3)))


def _fixture_octant():
    return reg.SphericalPolygon((geo.SpherePoint([1.0, 0.0, 0.0]),
                                 geo.SpherePoint([0.0, 1.0, 0.0]),
                                 geo.SpherePoint([0.0, 0.0, 1.0])))


def _fixture_intervals():
    return reg.HIntervalSet(np.array([[-2.0, -1.0], [1.0, 2.0]]))


def _check_geometry(threads):
    rng = np.random.Generator(np.random.Philox(key=1))
    worst = 0.0
    for _ in range(100):
        z = rng.standard_normal(3)
        x = geo.SpherePoint(z / np.linalg.norm(z))
        v = geo.project_tangent_sphere(x, rng.standard_normal(3))
        if v.norm() < 1e-12:
            continue
        v = v.scaled(1.0 / v.norm())
        t = 0.1 + 2.9 * rng.random()
        worst = max(worst, abs(geo.dist_sphere(x, geo.exp_sphere(x, v.scaled(t))) - t))
    o = geo.HyperPoint([0.0, 0.0, 1.0])
    for _ in range(100):
        w = geo.project_tangent_hyp(o, rng.standard_normal(3))
        if w.norm() < 1e-12:
            continue
        w = w.scaled(1.0 / w.norm())
        t = 0.1 + 7.9 * rng.random()
        worst = max(worst, abs(geo.dist_hyp(o, geo.exp_hyp(o, w.scaled(t))) - t))
    return worst <= 1e-10, {"worst_exp_dist_defect": worst}


def _check_cap_closed_form(threads):
    worst = 0.0
    for alpha in (0.3, 0.6, math.pi / 4, 1.2):
        cap = reg.Cap(geo.SpherePoint([0.0, 0.0, 1.0]), alpha)
        exact = math.pi * math.tan(alpha) ** 2
        worst = max(worst, abs(proj.cap_image_area(cap.center, cap) - exact))
        q = QuadratureSpec(method="cap-tensor", rel_tol=1e-10)
        quad = fn.area_functional(cap, cap.center, q).value
        worst = max(worst, abs(quad - exact) / exact)
    return worst <= 1e-8, {"worst_defect": worst}


def _check_octant(threads):
    octant = _fixture_octant()
    x = geo.SpherePoint(np.ones(3) / math.sqrt(3.0))
    exact = 1.5 * math.sqrt(3.0)
    shoelace = proj.polygon_image_area(x, octant)
    q = QuadratureSpec(method="polygon-adaptive", rel_tol=1e-9)
    quad = fn.area_functional(octant, x, q).value
    defect = max(abs(shoelace - exact), abs(quad - exact) / exact)
    return defect <= 1e-8, {"defect": defect}


def _check_gradient_fd(threads):
    q = QuadratureSpec(rel_tol=1e-12)
    h = 1e-5
    worst = 0.0
    for region in (_fixture_cap(), _fixture_union(), _fixture_octant()):
        for x in opt.sample_feasible_points(region, 2, seed=7):
            frame = geo.tangent_frame(x)
            v = geo.TangentVec(x, frame[0])
            g = fn.gradient(region, x, q)
            analytic = float(g.vec @ v.vec)
            ap = fn.area_functional(region, geo.exp_sphere(x, v.scaled(h)), q).value
            am = fn.area_functional(region, geo.exp_sphere(x, v.scaled(-h)), q).value
            fd = (ap - am) / (2.0 * h)
            worst = max(worst, abs(analytic - fd) / max(1e-2, abs(fd)))
    hr = reg.HCap(geo.HyperPoint([0.3, 0.0, math.sqrt(1.09)]), 0.7)
    x = geo.HyperPoint([0.0, 0.5, math.sqrt(1.25)])
    frame = geo.tangent_frame(x)
    v = geo.TangentVec(x, frame[0])
    g = fn.h_gradient(hr, x, q)
    analytic = float(geo.lorentz_dot(g.vec, v.vec))
    ap = fn.h_area_functional(hr, geo.exp_hyp(x, v.scaled(h)), q).value
    am = fn.h_area_functional(hr, geo.exp_hyp(x, v.scaled(-h)), q).value
    fd = (ap - am) / (2.0 * h)
    worst = max(worst, abs(analytic - fd) / max(1.0, abs(fd)))
    return worst <= 1e-5, {"worst_rel_defect": worst}


def _check_positivity(threads):
    rng = np.random.Generator(np.random.Philox(key=5))
    q = QuadratureSpec(rel_tol=1e-7)
    smallest = math.inf
    for region in (_fixture_cap(), _fixture_octant()):
        for x in opt.sample_feasible_points(region, 15, seed=11):
            z = rng.standard_normal(3)
            v = geo.project_tangent_sphere(x, z)
            if v.norm() < 1e-12:
                continue
            v = v.scaled(1.0 / v.norm())
            smallest = min(smallest, fn.second_derivative_dir(region, x, v, q))
    return smallest > 0.0, {"min_second_derivative": smallest}


def _check_cap_minimizer(threads):
    cap = _fixture_cap()
    cp = opt.minimize_sphere(cap)
    exact = math.pi * math.tan(cap.radius) ** 2
    dist = geo.dist_sphere(cp.location, cap.center)
    ok = dist <= 1e-7 and abs(cp.value - exact) <= 1e-8 \
        and cp.residual <= 1e-8 * max(cp.value, 1.0)
    return ok, {"dist_to_center": dist, "value_defect": abs(cp.value - exact),
                "residual": cp.residual}


def _check_interval_maxima(threads):
    region = _fixture_intervals()
    cps = opt.maximize_hyperbolic(region, QuadratureSpec(seed=3),
                                  opt.OptimizerOpts(starts=12))
    if len(cps) != 2:
        return False, {"count": len(cps)}
    s = [math.log(float(cp.location.coords[1] + cp.location.coords[0])) for cp in cps]
    a0 = 2.0 * (math.tanh(2.0) - math.tanh(1.0))
    ok = abs(s[0] + s[1]) <= 1e-6 and abs(cps[0].value - cps[1].value) <= 1e-9 \
        and cps[0].value > a0
    return ok, {"s_values": s, "values": [cp.value for cp in cps]}


def _check_sphere_ensemble(threads):
    reports, summary = cmp.sphere_min_ensemble(10, seed=400, threads=threads)
    return summary["violations"] == 0, summary


def _check_hyperbolic_ensemble(threads):
    reports, summary = cmp.hyperbolic_max_ensemble(6, seed=500, threads=threads)
    return summary["violations"] == 0, summary


def _check_potential_equality(threads):
    cap = _fixture_cap()
    report = cmp.compare_potential(cap, fn.PotentialSpec.power(1.0),
                                   QuadratureSpec(rel_tol=1e-9))
    return abs(report.gap) <= 1e-6, report.to_json()


def _check_boundary_divergence(threads):
    cap = _fixture_cap()
    f = geo.tangent_frame(cap.center)[0]
    values = []
    for m in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5):
        d = math.acos(m) - cap.radius
        x = geo.exp_sphere(cap.center, geo.TangentVec(cap.center, d * f))
        values.append(fn.area_functional(cap, x).value)
    increasing = all(b > a for a, b in zip(values, values[1:]))
    hr = reg.HCap(geo.HyperPoint([0.0, 0.0, 1.0]), 0.7)
    base = fn.h_area_functional(hr, hr.center).value
    far = geo.exp_hyp(hr.center, geo.TangentVec(hr.center, 20.0 * geo.tangent_frame(hr.center)[0]))
    ratio = fn.h_area_functional(hr, far).value / base
    return increasing and ratio <= 1e-6, {"values": values, "decay_ratio": ratio}


def _check_determinism(threads):
    region = _fixture_union()
    a = reg.sample(region, 1000, seed=9)
    b = reg.sample(region, 1000, seed=9)
    q = QuadratureSpec(method="monte-carlo", mc_samples=10_000, seed=9)
    xv = geo.SpherePoint([0.0, 0.0, 1.0]).coords
    ia = integrate(region, lambda pts: pts @ xv, q)
    ib = integrate(region, lambda pts: pts @ xv, q)
    ok = bool(np.array_equal(a, b)) and repr(ia.value) == repr(ib.value)
    return ok, {"sample_match": bool(np.array_equal(a, b)), "mc_value": ia.value}


_CHECKS = [
    ("geometry-roundtrip", _check_geometry),
    ("cap-closed-form", _check_cap_closed_form),
    ("octant-shoelace", _check_octant),
    ("gradient-finite-difference", _check_gradient_fd),
    ("second-derivative-positivity", _check_positivity),
    ("cap-minimizer", _check_cap_minimizer),
    ("interval-two-maxima", _check_interval_maxima),
    ("sphere-min-ensemble", _check_sphere_ensemble),
    ("hyperbolic-max-ensemble", _check_hyperbolic_ensemble),
    ("potential-equality", _check_potential_equality),
    ("boundary-divergence-and-decay", _check_boundary_divergence),
    ("determinism", _check_determinism),
]


def _cmd_verify(args):
    lines = []
    failures = 0
    for name, check in _CHECKS:
        ok, detail = check(args.threads)
        failures += 0 if ok else 1
        lines.append(json.dumps({"check": name, "pass": bool(ok), "detail": detail},
                                sort_keys=True, default=float))
    lines.append(json.dumps({"summary": {"checks": len(_CHECKS), "failures": failures}},
                            sort_keys=True))
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if failures == 0 else 4


def run(args) -> int:
    handlers = {
        "eval": _cmd_eval,
        "grad": _cmd_grad,
        "optimize": _cmd_optimize,
        "hyp-optimize": _cmd_hyp_optimize,
        "compare-disc": _cmd_compare,
        "verify": _cmd_verify,
        "grid": _cmd_grid,
    }
    try:
        return handlers[args.command](args)
    except GnomonError as e:
        sys.stderr.write(json.dumps({"error": e.code, "detail": str(e)}) + "\n")
        return e.exit_code
    except (ValueError, OSError, json.JSONDecodeError) as e:
        sys.stderr.write(json.dumps({"error": "invalid-input", "detail": str(e)}) + "\n")
        return 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    sys.exit(run(args))


if __name__ == "__main__":
    main()
