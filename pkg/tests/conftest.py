import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def unit_square():
    from skelmin.geometry import Polyhedron

    return Polyhedron.from_box(np.zeros(2), np.ones(2))


def unit_cube():
    from skelmin.geometry import Polyhedron

    return Polyhedron.from_box(np.zeros(3), np.ones(3))


def grid2(nx, ny, stride=1.0, origin=(0.0, 0.0)):
    from skelmin.grids import DyadicGridSpec, build_dyadic

    spec = DyadicGridSpec(stride, np.asarray(origin, dtype=float), np.eye(2),
                          frozenset((i, j) for i in range(nx) for j in range(ny)))
    return build_dyadic(spec)


def grid3(nx, ny, nz, stride=1.0, origin=(0.0, 0.0, 0.0)):
    from skelmin.grids import DyadicGridSpec, build_dyadic

    spec = DyadicGridSpec(stride, np.asarray(origin, dtype=float), np.eye(3),
                          frozenset((i, j, k) for i in range(nx)
                                    for j in range(ny) for k in range(nz)))
    return build_dyadic(spec)


def vertex_id(S, point):
    key = frozenset([S._canon(np.asarray(point, dtype=float))])
    return S._key_to_id[key]


def edge_id(S, a, b):
    key = frozenset([S._canon(np.asarray(a, dtype=float)),
                     S._canon(np.asarray(b, dtype=float))])
    return S._key_to_id[key]
