import math

import numpy as np
import pytest

import gnomon as g
from gnomon.errors import OutsideHemisphereError
from conftest import random_sphere_point

E1 = g.SpherePoint([1.0, 0.0, 0.0])
E2 = g.SpherePoint([0.0, 1.0, 0.0])


def test_gnomonic_fwd_examples():
    assert np.allclose(g.gnomonic_fwd(E1, E1).coords, 0.0)
    y = g.SpherePoint(np.array([1.0, 1.0, 0.0]) / math.sqrt(2.0))
    u = g.gnomonic_fwd(E1, y)
    assert np.allclose(u.coords, [1.0, 0.0], atol=1e-14)
    assert np.linalg.norm(u.coords) == pytest.approx(math.tan(math.pi / 4), abs=1e-14)
    with pytest.raises(OutsideHemisphereError):
        g.gnomonic_fwd(E1, E2)


def test_gnomonic_inv_examples():
    assert np.allclose(g.gnomonic_inv(E1, np.zeros(2)).coords, E1.coords)
    y = g.gnomonic_inv(E1, np.array([1.0, 0.0]))
    assert np.allclose(y.coords, np.array([1.0, 1.0, 0.0]) / math.sqrt(2.0), atol=1e-14)


def test_gnomonic_roundtrip_on_cap_samples(north):
    cap = g.Cap(north, 1.2)
    pts = g.sample(cap, 100, seed=21)
    for row in pts:
        y = g.SpherePoint(row)
        u = g.gnomonic_fwd(north, y)
        back = g.gnomonic_inv(north, u)
        assert np.max(np.abs(back.coords - y.coords)) <= 1e-12


def test_jacobian_examples():
    assert g.jacobian_sphere(E1, E1) == pytest.approx(1.0, abs=1e-15)
    y3 = g.SpherePoint(np.array([1.0, 1.0, 0.0]) / math.sqrt(2.0))
    assert g.jacobian_sphere(E1, y3) == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-14)
    y2 = g.SpherePoint(np.array([1.0, 1.0]) / math.sqrt(2.0))
    x2 = g.SpherePoint([1.0, 0.0])
    assert g.jacobian_sphere(x2, y2) == pytest.approx(2.0, rel=1e-14)


def test_chart_norm_identities(north, origin_h2):
    rng = np.random.default_rng(22)
    for _ in range(100):
        x = random_sphere_point(rng)
        v = g.project_tangent_sphere(x, rng.standard_normal(3))
        if v.norm() < 1e-12:
            continue
        t = rng.uniform(1e-3, math.pi / 2 - 1e-3)
        y = g.exp_sphere(x, v.scaled(t / v.norm()))
        u = g.gnomonic_fwd(x, y)
        assert abs(np.linalg.norm(u.coords) - math.tan(g.dist_sphere(x, y))) <= 1e-10
    for _ in range(100):
        w = g.project_tangent_hyp(origin_h2, rng.standard_normal(3))
        if w.norm() < 1e-12:
            continue
        t = rng.uniform(1e-3, 5.0)
        y = g.exp_hyp(origin_h2, w.scaled(t / w.norm()))
        u = g.hyp_fwd(origin_h2, y)
        assert abs(np.linalg.norm(u.coords) - math.tanh(g.dist_hyp(origin_h2, y))) <= 1e-10
        assert np.linalg.norm(u.coords) < 1.0


def test_collinearity_of_geodesic_triples(north, origin_h2):
    rng = np.random.default_rng(23)
    for _ in range(50):
        x = random_sphere_point(rng)
        v = g.project_tangent_sphere(x, rng.standard_normal(3))
        v = v.scaled(1.0 / v.norm())
        y1 = g.exp_sphere(x, v.scaled(0.2))
        y2 = g.exp_sphere(x, v.scaled(0.5))
        y3 = g.exp_sphere(x, v.scaled(0.9))
        base = random_sphere_point(rng)
        if min(float(base.coords @ y.coords) for y in (y1, y2, y3)) < 0.2:
            continue
        u1, u2, u3 = (g.gnomonic_fwd(base, y).coords for y in (y1, y2, y3))
        cross = (u2[0] - u1[0]) * (u3[1] - u1[1]) - (u2[1] - u1[1]) * (u3[0] - u1[0])
        assert abs(cross) <= 1e-9
    for _ in range(50):
        w = g.project_tangent_hyp(origin_h2, rng.standard_normal(3))
        w = w.scaled(1.0 / w.norm())
        ys = [g.exp_hyp(origin_h2, w.scaled(s)) for s in (0.3, 0.8, 1.5)]
        base = g.exp_hyp(origin_h2, g.project_tangent_hyp(
            origin_h2, rng.standard_normal(3)).scaled(0.4))
        u1, u2, u3 = (g.hyp_fwd(base, y).coords for y in ys)
        cross = (u2[0] - u1[0]) * (u3[1] - u1[1]) - (u2[1] - u1[1]) * (u3[0] - u1[0])
        assert abs(cross) <= 1e-9


def test_octant_projected_area(octant, octant_center):
    exact = 1.5 * math.sqrt(3.0)
    assert g.polygon_image_area(octant_center, octant) == pytest.approx(exact, abs=1e-13)
    # Monte Carlo oracle for the integral of (x.y)^-3 over the octant
    pts = g.sample(octant, 1_000_000, seed=77)
    vals = (pts @ octant_center.coords) ** -3.0
    est = float(np.mean(vals)) * g.measure(octant)
    se = float(np.std(vals, ddof=1)) / math.sqrt(len(pts)) * g.measure(octant)
    assert abs(est - exact) <= 4.0 * se


def test_small_polygon_limit(north):
    # shrunken polygon area over its measure approaches the Jacobian at its center
    f = g.tangent_frame(north)
    x = g.exp_sphere(north, g.TangentVec(north, 0.5 * f[0]))
    t = 0.004
    verts = tuple(
        g.exp_sphere(north, g.TangentVec(north, t * (math.cos(a) * f[0] + math.sin(a) * f[1])))
        for a in np.linspace(0.0, 2 * math.pi, 8, endpoint=False))
    poly = g.SphericalPolygon(verts)
    ratio = g.polygon_image_area(x, poly) / g.measure(poly)
    jac = g.jacobian_sphere(x, north)
    assert ratio == pytest.approx(jac, rel=1e-4)


def test_polygon_boundary_margin_error(octant, north):
    # margin at the chart north pole is 0 (vertices on the equator of x)
    with pytest.raises(OutsideHemisphereError):
        g.polygon_image_area(north, octant)


def test_cap_image_circle_cases(north):
    for alpha in np.arange(0.1, 1.45, 0.1):
        cap = g.Cap(north, float(alpha))
        conic = g.cap_image_conic(north, cap)
        assert conic.kind == "ellipse"
        assert conic.semi_axes[0] == pytest.approx(math.tan(alpha), rel=1e-13)
        assert conic.semi_axes[1] == pytest.approx(math.tan(alpha), rel=1e-13)
        assert g.cap_image_area(north, cap) == pytest.approx(
            math.pi * math.tan(alpha) ** 2, rel=1e-12)


def test_cap_image_classification(north):
    f = g.tangent_frame(north)
    alpha = 0.6
    x = g.exp_sphere(north, g.TangentVec(north, (math.pi / 2 - alpha) * f[0]))
    conic = g.cap_image_conic(x, g.Cap(north, alpha))
    assert conic.kind == "parabola"
    x2 = g.exp_sphere(north, g.TangentVec(north, (math.pi / 2 - alpha + 0.2) * f[0]))
    assert g.cap_image_conic(x2, g.Cap(north, alpha)).kind == "hyperbola-branch"
    with pytest.raises(OutsideHemisphereError):
        g.cap_image_area(x2, g.Cap(north, alpha))


def test_cap_image_ellipse_matches_quadrature(north):
    alpha, psi = math.pi / 4, math.pi / 6
    f = g.tangent_frame(north)
    x = g.exp_sphere(north, g.TangentVec(north, psi * f[0]))
    cap = g.Cap(north, alpha)
    exact = g.cap_image_area(x, cap)
    quad = g.integrate(cap, lambda pts: (pts @ x.coords) ** -3.0,
                       g.QuadratureSpec(rel_tol=1e-10))
    assert exact == pytest.approx(quad.value, rel=1e-8)


def test_hyp_fwd_examples(origin_h2):
    assert np.allclose(g.hyp_fwd(origin_h2, origin_h2).coords, 0.0)
    o1 = g.HyperPoint([0.0, 1.0])
    y = g.HyperPoint([math.sinh(1.0), math.cosh(1.0)])
    u = g.hyp_fwd(o1, y)
    assert np.linalg.norm(u.coords) == pytest.approx(math.tanh(1.0), abs=1e-14)


def test_hyp_inv_roundtrip(origin_h2):
    rng = np.random.default_rng(25)
    for _ in range(50):
        w = g.project_tangent_hyp(origin_h2, rng.standard_normal(3))
        if w.norm() < 1e-12:
            continue
        y = g.exp_hyp(origin_h2, w.scaled(rng.uniform(0.1, 3.0) / w.norm()))
        u = g.hyp_fwd(origin_h2, y)
        back = g.hyp_inv(origin_h2, u)
        assert np.max(np.abs(back.coords - y.coords)) <= 1e-10 * max(1.0, np.max(np.abs(y.coords)))


def test_hyp_polygon_image_area(origin_h2):
    # degenerate loop collapses to zero area
    o = origin_h2
    f = g.tangent_frame(o)
    a = g.exp_hyp(o, g.TangentVec(o, 0.5 * f[0]))
    degenerate = g.HPolygon((o, a, g.exp_hyp(o, g.TangentVec(o, 0.25 * f[0]))))
    assert g.hyp_polygon_image_area(o, degenerate) <= 1e-12
    # a shrunken polygon's image area over its measure tends to 1 at the center
    t = 0.003
    verts = tuple(g.exp_hyp(o, g.TangentVec(o, t * (math.cos(ang) * f[0] + math.sin(ang) * f[1])))
                  for ang in np.linspace(0.0, 2 * math.pi, 10, endpoint=False))
    poly = g.HPolygon(verts)
    assert g.hyp_polygon_image_area(o, poly) / g.measure(poly) == pytest.approx(1.0, rel=1e-4)
    # the image shrinks to nothing as the viewpoint recedes
    far = g.exp_hyp(o, g.TangentVec(o, 12.0 * f[0]))
    assert g.hyp_polygon_image_area(far, poly) <= 1e-9
