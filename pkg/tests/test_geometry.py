import math

import numpy as np
import pytest

import gnomon as g
from conftest import random_sphere_point

E1 = g.SpherePoint([1.0, 0.0, 0.0])
E2 = g.SpherePoint([0.0, 1.0, 0.0])
O1 = g.HyperPoint([0.0, 1.0])


def test_dist_sphere_examples():
    assert g.dist_sphere(E1, E1) == 0.0
    assert g.dist_sphere(E1, E2) == pytest.approx(math.pi / 2, abs=1e-15)
    assert g.dist_sphere(E1, E1.antipode()) == pytest.approx(math.pi, abs=1e-15)


def test_exp_sphere_examples():
    zero = g.TangentVec(E1, np.zeros(3))
    assert g.exp_sphere(E1, zero) is E1
    quarter = g.TangentVec(E1, (math.pi / 2) * E2.coords)
    assert np.allclose(g.exp_sphere(E1, quarter).coords, E2.coords, atol=1e-15)
    half = g.TangentVec(E1, math.pi * E2.coords)
    assert np.allclose(g.exp_sphere(E1, half).coords, -E1.coords, atol=1e-15)


def test_project_tangent_sphere_examples():
    assert np.allclose(g.project_tangent_sphere(E1, E1.coords).vec, 0.0)
    assert np.allclose(g.project_tangent_sphere(E1, E2.coords).vec, E2.coords)
    assert np.allclose(g.project_tangent_sphere(E1, E1.coords + E2.coords).vec, E2.coords)


def test_dist_hyp_examples():
    assert g.dist_hyp(O1, O1) == 0.0
    p1 = g.HyperPoint([math.sinh(1.0), math.cosh(1.0)])
    assert g.dist_hyp(p1, O1) == pytest.approx(1.0, abs=1e-12)
    p2 = g.HyperPoint([math.sinh(2.0), math.cosh(2.0)])
    pm1 = g.HyperPoint([math.sinh(-1.0), math.cosh(-1.0)])
    assert g.dist_hyp(p2, pm1) == pytest.approx(3.0, abs=1e-12)


def test_exp_hyp_examples():
    zero = g.TangentVec(O1, np.zeros(2))
    assert g.exp_hyp(O1, zero) is O1
    e1 = g.TangentVec(O1, np.array([1.0, 0.0]))
    y = g.exp_hyp(O1, e1)
    assert np.allclose(y.coords, [math.sinh(1.0), math.cosh(1.0)], atol=1e-12)
    y2 = g.exp_hyp(O1, e1.scaled(2.0))
    assert np.allclose(y2.coords, [math.sinh(2.0), math.cosh(2.0)], atol=1e-12)


def test_project_tangent_hyp_examples():
    o = g.HyperPoint([0.0, 0.0, 1.0])
    assert np.allclose(g.project_tangent_hyp(o, o.coords).vec, 0.0)
    e1 = np.array([1.0, 0.0, 0.0])
    assert np.allclose(g.project_tangent_hyp(o, e1).vec, e1)
    assert np.allclose(g.project_tangent_hyp(o, e1 + o.coords).vec, e1)


def test_exp_dist_consistency_sphere():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(200):
        x = random_sphere_point(rng)
        v = g.project_tangent_sphere(x, rng.standard_normal(3))
        if v.norm() < 1e-12:
            continue
        v = v.scaled(1.0 / v.norm())
        t = rng.uniform(1e-3, math.pi - 1e-3)
        worst = max(worst, abs(g.dist_sphere(x, g.exp_sphere(x, v.scaled(t))) - t))
    assert worst <= 1e-10


def test_exp_dist_consistency_hyp():
    rng = np.random.default_rng(12)
    o = g.HyperPoint([0.0, 0.0, 1.0])
    worst = 0.0
    for _ in range(200):
        x = g.exp_hyp(o, g.project_tangent_hyp(o, rng.standard_normal(3)).scaled(0.5))
        v = g.project_tangent_hyp(x, rng.standard_normal(3))
        if v.norm() < 1e-12:
            continue
        v = v.scaled(1.0 / v.norm())
        t = rng.uniform(1e-3, 10.0)
        worst = max(worst, abs(g.dist_hyp(x, g.exp_hyp(x, v.scaled(t))) - t))
    assert worst <= 1e-10


def test_projection_idempotence():
    rng = np.random.default_rng(13)
    for _ in range(100):
        x = random_sphere_point(rng)
        w = rng.standard_normal(3)
        once = g.project_tangent_sphere(x, w).vec
        twice = g.project_tangent_sphere(x, once).vec
        assert np.max(np.abs(once - twice)) <= 1e-12
    o = g.HyperPoint([0.0, 0.0, 1.0])
    for _ in range(100):
        x = g.exp_hyp(o, g.project_tangent_hyp(o, rng.standard_normal(3)).scaled(1.0))
        w = rng.standard_normal(3)
        once = g.project_tangent_hyp(x, w).vec
        twice = g.project_tangent_hyp(x, once).vec
        # float64 cannot hold 1e-12 absolute when coordinates grow like cosh
        assert np.max(np.abs(once - twice)) <= 1e-12 * max(1.0, float(np.linalg.norm(once)))


def test_point_constructors_normalize():
    x = g.SpherePoint([1.0 + 1e-8, 0.0, 0.0])
    assert abs(np.linalg.norm(x.coords) - 1.0) <= 1e-12
    with pytest.raises(ValueError):
        g.SpherePoint([2.0, 0.0, 0.0])
    y = g.HyperPoint([0.3, 0.0, math.sqrt(1.09) + 1e-9])
    assert abs(g.lorentz_dot(y.coords, y.coords) + 1.0) <= 1e-12
    with pytest.raises(ValueError):
        g.HyperPoint([0.0, 0.0, -1.0])
    with pytest.raises(ValueError):
        g.HyperPoint([5.0, 0.0, 1.0])


def test_tangent_vec_rejects_radial():
    with pytest.raises(ValueError):
        g.TangentVec(E1, E1.coords)


def test_mixed_dimensions_error():
    with pytest.raises(ValueError):
        g.dist_sphere(E1, g.SpherePoint([1.0, 0.0]))
    with pytest.raises(ValueError):
        g.dist_hyp(O1, g.HyperPoint([0.0, 0.0, 1.0]))


def test_tangent_frame_orthonormal_oriented():
    rng = np.random.default_rng(14)
    for _ in range(50):
        x = random_sphere_point(rng)
        F = g.tangent_frame(x)
        assert np.allclose(F @ F.T, np.eye(2), atol=1e-12)
        assert np.allclose(F @ x.coords, 0.0, atol=1e-12)
        assert np.linalg.det(np.vstack([F, x.coords])) > 0.0
        assert np.array_equal(F, g.tangent_frame(x))
    o = g.HyperPoint([0.4, -0.2, math.sqrt(1.2)])
    F = g.tangent_frame(o)
    gram = np.array([[g.lorentz_dot(a, b) for b in F] for a in F])
    assert np.allclose(gram, np.eye(2), atol=1e-12)
    assert abs(g.lorentz_dot(F[0], o.coords)) <= 1e-12
