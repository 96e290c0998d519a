import math
from math import factorial

import numpy as np
import pytest

import gnomon as g
from gnomon.errors import BudgetExceededError, NonFiniteIntegrandError
from gnomon.quadrature import _TRI_HI_BARY, _TRI_HI_W, _TRI_LO_BARY, _TRI_LO_W


def test_triangle_rules_are_exact_to_declared_degree():
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    for bary, w, degree in ((_TRI_HI_BARY, _TRI_HI_W, 10), (_TRI_LO_BARY, _TRI_LO_W, 8)):
        pts = bary @ tri
        for total in range(degree + 1):
            for i in range(total + 1):
                j = total - i
                approx = 0.5 * float(np.sum(w * pts[:, 0] ** i * pts[:, 1] ** j))
                exact = factorial(i) * factorial(j) / factorial(i + j + 2)
                assert abs(approx - exact) <= 1e-14


def test_cap_tensor_unit_integrand(north):
    cap = g.Cap(north, math.pi / 3)
    res = g.integrate(cap, lambda pts: np.ones(len(pts)), g.QuadratureSpec(rel_tol=1e-10))
    assert res.value == pytest.approx(math.pi, rel=1e-10)
    assert res.err_est <= 1e-10 * math.pi
    assert res.method_used == "cap-tensor"


def test_polygon_unit_integrand(octant):
    res = g.integrate(octant, lambda pts: np.ones(len(pts)), g.QuadratureSpec(rel_tol=1e-9))
    assert res.value == pytest.approx(math.pi / 2, rel=1e-9)


def test_projection_integrand_over_own_cap(north):
    cap = g.Cap(north, math.pi / 4)
    res = g.integrate(cap, lambda pts: (pts @ north.coords) ** -3.0,
                      g.QuadratureSpec(rel_tol=1e-10))
    assert res.value == pytest.approx(math.pi, rel=1e-8)


def test_integrate_vector_moment_closed_form(north):
    # e3 component of int y over a cap: 2 pi int cos t sin t dt = pi sin^2(a)
    alpha = 0.9
    cap = g.Cap(north, alpha)
    res = g.integrate_vector(cap, lambda pts: pts, g.QuadratureSpec(rel_tol=1e-11))
    assert res.value[2] == pytest.approx(math.pi * math.sin(alpha) ** 2, rel=1e-10)
    assert abs(res.value[0]) <= 1e-12
    assert abs(res.value[1]) <= 1e-12


def test_integrate_vector_symmetry(north):
    cap = g.Cap(north, 0.7)
    F = lambda pts: pts * ((pts @ north.coords) ** -4.0)[:, None]
    res = g.integrate_vector(cap, F, g.QuadratureSpec(rel_tol=1e-10))
    assert abs(res.value[0]) <= max(res.err_est[0], 1e-12)
    assert abs(res.value[1]) <= max(res.err_est[1], 1e-12)


def test_integrate_vector_zero_field(north):
    cap = g.Cap(north, 0.5)
    res = g.integrate_vector(cap, lambda pts: np.zeros_like(pts), g.QuadratureSpec())
    assert np.all(res.value == 0.0)
    assert np.all(res.err_est == 0.0)


def test_interval_examples(interval_pair):
    res = g.integrate_intervals(interval_pair, lambda th: np.ones_like(th))
    assert res.value == pytest.approx(2.0, abs=1e-12)
    single = g.HIntervalSet([[1.0, 2.0]])
    res = g.integrate_intervals(single, lambda th: np.cosh(-th) ** -2.0)
    assert res.value == pytest.approx(math.tanh(2.0) - math.tanh(1.0), abs=1e-12)
    res = g.integrate_intervals(interval_pair, lambda th: np.cosh(0.0 - th) ** -2.0)
    assert res.value == pytest.approx(2.0 * (math.tanh(2.0) - math.tanh(1.0)), abs=1e-12)


def test_union_route(two_cap_union):
    res = g.integrate(two_cap_union, lambda pts: np.ones(len(pts)),
                      g.QuadratureSpec(rel_tol=1e-10))
    assert res.value == pytest.approx(g.measure(two_cap_union), rel=1e-10)
    assert res.method_used == "union"


def test_monte_carlo_route(two_cap_union, north):
    q = g.QuadratureSpec(method="monte-carlo", mc_samples=200_000, seed=4)
    res = g.integrate(two_cap_union, lambda pts: (pts @ north.coords) ** -3.0, q)
    tight = g.integrate(two_cap_union, lambda pts: (pts @ north.coords) ** -3.0,
                        g.QuadratureSpec(rel_tol=1e-10))
    assert abs(res.value - tight.value) <= 4.0 * res.err_est


def test_monte_carlo_consistency_30_runs(north):
    cap = g.Cap(north, 0.8)
    f = lambda pts: np.exp(pts @ north.coords)
    exact = g.integrate(cap, f, g.QuadratureSpec(rel_tol=1e-12)).value
    hits = 0
    for k in range(30):
        q = g.QuadratureSpec(method="monte-carlo", mc_samples=20_000, seed=1000 + k)
        res = g.integrate(cap, f, q)
        if abs(res.value - exact) <= 3.0 * res.err_est:
            hits += 1
    assert hits >= 28


def test_determinism_bit_identical(octant, north):
    q = g.QuadratureSpec(rel_tol=1e-9)
    f = lambda pts: (pts @ north.coords + 1.5) ** -2.0
    a = g.integrate(octant, f, q)
    b = g.integrate(octant, f, q)
    assert repr(a.value) == repr(b.value)
    assert a.evals == b.evals
    qmc = g.QuadratureSpec(method="monte-carlo", mc_samples=50_000, seed=9)
    ma = g.integrate(octant, f, qmc)
    mb = g.integrate(octant, f, qmc)
    assert repr(ma.value) == repr(mb.value)


def test_refinement_monotonicity(north, octant):
    cap = g.Cap(north, math.pi / 3)
    errs = []
    for tol in (1e-6, 1e-8, 1e-10):
        v = g.integrate(cap, lambda pts: np.ones(len(pts)), g.QuadratureSpec(rel_tol=tol)).value
        errs.append(abs(v - math.pi))
    assert errs[2] <= errs[0] + 1e-15
    errs = []
    for tol in (1e-5, 1e-7, 1e-9):
        v = g.integrate(octant, lambda pts: np.ones(len(pts)), g.QuadratureSpec(rel_tol=tol)).value
        errs.append(abs(v - math.pi / 2))
    assert errs[2] <= errs[0] + 1e-15


def test_chart_pullback_matches_angle_measure():
    # the planar weight is exactly the inverse Jacobian of the projection
    rng = np.random.default_rng(6)
    for seed in range(3):
        poly = g.random_region(1.0 + 0.4 * seed, "perturbed-polygon", 5 + seed, seed + 50)
        res = g.integrate(poly, lambda pts: np.ones(len(pts)), g.QuadratureSpec(rel_tol=1e-9))
        assert res.value == pytest.approx(g.measure(poly), rel=1e-8)


def test_hyp_polygon_chart_pullback():
    poly = g.random_hregion(1.5, "perturbed-polygon", 6, 11)
    res = g.integrate(poly, lambda pts: np.ones(len(pts)), g.QuadratureSpec(rel_tol=1e-9))
    assert res.value == pytest.approx(g.measure(poly), rel=1e-8)


def test_budget_exceeded(octant, north):
    q = g.QuadratureSpec(rel_tol=1e-12, max_evals=500)
    with pytest.raises(BudgetExceededError):
        g.integrate(octant, lambda pts: (pts @ north.coords) ** -3.0, q)


def test_non_finite_integrand(north):
    cap = g.Cap(north, 0.5)
    with pytest.raises(NonFiniteIntegrandError):
        g.integrate(cap, lambda pts: np.full(len(pts), np.nan), g.QuadratureSpec())


def test_method_region_mismatch(north, octant):
    with pytest.raises(ValueError):
        g.integrate(g.Cap(north, 0.5), lambda pts: np.ones(len(pts)),
                    g.QuadratureSpec(method="polygon-adaptive"))
    with pytest.raises(ValueError):
        g.integrate(octant, lambda pts: np.ones(len(pts)),
                    g.QuadratureSpec(method="cap-tensor"))


def test_spec_validation():
    with pytest.raises(ValueError):
        g.QuadratureSpec(rel_tol=2.0)
    with pytest.raises(ValueError):
        g.QuadratureSpec(mc_samples=10)
    with pytest.raises(ValueError):
        g.QuadratureSpec(method="simpson")
