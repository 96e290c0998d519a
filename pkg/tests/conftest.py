import math

import numpy as np
import pytest

import gnomon as g


@pytest.fixture(scope="session")
def north():
    return g.SpherePoint([0.0, 0.0, 1.0])


@pytest.fixture(scope="session")
def origin_h2():
    return g.HyperPoint([0.0, 0.0, 1.0])


@pytest.fixture(scope="session")
def octant():
    return g.SphericalPolygon((g.SpherePoint([1.0, 0.0, 0.0]),
                               g.SpherePoint([0.0, 1.0, 0.0]),
                               g.SpherePoint([0.0, 0.0, 1.0])))


@pytest.fixture(scope="session")
def octant_center():
    return g.SpherePoint(np.ones(3) / math.sqrt(3.0))


@pytest.fixture(scope="session")
def two_cap_union(north):
    f = g.tangent_frame(north)
    c1 = g.exp_sphere(north, g.TangentVec(north, 0.5 * f[0]))
    c2 = g.exp_sphere(north, g.TangentVec(north, -0.5 * f[0]))
    return g.RegionUnion((g.Cap(c1, 0.3), g.Cap(c2, 0.3)))


@pytest.fixture(scope="session")
def interval_pair():
    return g.HIntervalSet(np.array([[-2.0, -1.0], [1.0, 2.0]]))


def interval_pair_area(s):
    """Closed form for the projected length of the two-interval fixture."""
    return (math.tanh(s + 2.0) - math.tanh(s + 1.0)
            + math.tanh(s - 1.0) - math.tanh(s - 2.0))


def random_sphere_point(rng, dim=3):
    z = rng.standard_normal(dim)
    return g.SpherePoint(z / np.linalg.norm(z))
