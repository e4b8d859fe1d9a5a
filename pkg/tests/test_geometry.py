import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skelmin.errors import EmptyRegion, UnboundedRegion
from skelmin.geometry import (Complex, HalfSpace, Polyhedron, enumerate_subfaces,
                              min_enclosing_ball, shape_stats, validate_complex,
                              vertex_enumeration)

from conftest import grid2, unit_cube, unit_square


def box_halfspaces(n):
    hs = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        hs.append(HalfSpace(e, 1.0))
        hs.append(HalfSpace(-e, 0.0))
    return hs


class TestVertexEnumeration:
    def test_unit_square(self):
        v = vertex_enumeration(box_halfspaces(2))
        got = {tuple(np.round(p, 9)) for p in v}
        assert got == {(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)}

    def test_unit_cube(self):
        v = vertex_enumeration(box_halfspaces(3))
        assert len(v) == 8
        for p in v:
            assert np.all((np.abs(p) < 1e-9) | (np.abs(p - 1) < 1e-9))

    def test_standard_simplex(self):
        hs = [HalfSpace(np.array([-1.0, 0]), 0), HalfSpace(np.array([0, -1.0]), 0),
              HalfSpace(np.array([1.0, 1.0]) / np.sqrt(2), 1 / np.sqrt(2))]
        v = vertex_enumeration(hs)
        got = {tuple(np.round(p, 9)) for p in v}
        assert got == {(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)}

    def test_empty(self):
        hs = [HalfSpace(np.array([1.0, 0]), 0.0), HalfSpace(np.array([-1.0, 0]), -1.0),
              HalfSpace(np.array([0, 1.0]), 1.0), HalfSpace(np.array([0, -1.0]), 0.0)]
        with pytest.raises(EmptyRegion):
            vertex_enumeration(hs)

    def test_unbounded(self):
        hs = [HalfSpace(np.array([1.0, 0]), 1.0), HalfSpace(np.array([0, 1.0]), 1.0)]
        with pytest.raises(UnboundedRegion):
            vertex_enumeration(hs)


class TestSubfaces:
    def test_unit_square_counts(self):
        lat = enumerate_subfaces(unit_square())
        assert [len(l) for l in lat.levels] == [4, 4, 1]

    def test_unit_cube_counts(self):
        lat = enumerate_subfaces(unit_cube())
        assert [len(l) for l in lat.levels] == [8, 12, 6, 1]

    def test_simplex_counts(self):
        tri = Polyhedron.from_vertices([[0, 0], [1, 0], [0, 1]])
        lat = enumerate_subfaces(tri)
        assert [len(l) for l in lat.levels] == [3, 3, 1]

    def test_lattice_vertices_match_enumeration(self):
        p = Polyhedron.from_halfspaces(box_halfspaces(2))
        lat = enumerate_subfaces(p)
        got = {tuple(np.round(f.vertices[0], 9)) for f in lat.levels[0]}
        want = {tuple(np.round(q, 9)) for q in vertex_enumeration(box_halfspaces(2))}
        assert got == want

    def test_faces_lie_in_one_halfspace_boundary(self):
        p = unit_cube()
        lat = enumerate_subfaces(p)
        for face in lat.levels[2]:
            active = [h for h in p.half_spaces
                      if np.all(np.abs(face.vertices @ h.normal - h.offset) < 1e-9)]
            assert len(active) == 1

    def test_subface_partition(self, rng):
        # 1e4 random points of each polyhedron lie in the relative interior
        # of exactly one subface (vectorized membership per face)
        for poly in (unit_square(), Polyhedron.from_vertices([[0, 0], [1, 0], [0, 1]]),
                     unit_cube()):
            lat = enumerate_subfaces(poly)
            lo = poly.vertices.min(axis=0)
            hi = poly.vertices.max(axis=0)
            pts = []
            while len(pts) < 10_000:
                cand = rng.uniform(lo, hi, size=(20_000, poly.ambient_dim))
                mask = np.ones(len(cand), dtype=bool)
                for h in poly.half_spaces:
                    mask &= cand @ h.normal <= h.offset + 1e-9
                pts.extend(cand[mask][: 10_000 - len(pts)])
            pts = np.array(pts[:10_000])
            hits = np.zeros(len(pts), dtype=int)
            for f in lat.all_faces():
                if f.dim == 0:
                    m = np.linalg.norm(pts - f.vertices[0], axis=1) <= 1e-9
                else:
                    m = f.dist_to_hull(pts) <= 1e-9
                    for h in f.half_spaces:
                        m &= pts @ h.normal < h.offset - 1e-9
                hits += m.astype(int)
            assert np.all(hits == 1)


class TestShapeStats:
    def test_unit_square(self):
        s = shape_stats(unit_square())
        assert s.outer_radius == pytest.approx(np.sqrt(2) / 2, abs=1e-9)
        assert s.inner_radius == pytest.approx(0.5, abs=1e-9)
        assert s.rotondity == pytest.approx(1 / np.sqrt(2), abs=1e-9)

    def test_equilateral_triangle(self):
        tri = Polyhedron.from_vertices([[0, 0], [1, 0], [0.5, np.sqrt(3) / 2]])
        assert shape_stats(tri).rotondity == pytest.approx(0.5, abs=1e-9)

    def test_singleton_convention(self):
        pt = Polyhedron.from_vertices([[0.3, 0.7]])
        s = shape_stats(pt)
        assert s.outer_radius == 0.0
        assert s.rotondity == 1.0

    def test_dyadic_cube_exact(self):
        for n, r in ((2, 0.37), (3, 0.85), (2, 1.0), (3, 0.125)):
            c = Polyhedron.from_box(np.zeros(n), r * np.ones(n))
            s = shape_stats(c)
            assert abs(s.outer_radius - r * np.sqrt(n) / 2) < 1e-9
            assert abs(s.inner_radius - r / 2) < 1e-9
            assert abs(s.rotondity - 1 / np.sqrt(n)) < 1e-9

    @settings(max_examples=40, deadline=None)
    @given(angle=st.floats(0, 2 * np.pi), scale=st.floats(0.1, 10),
           tx=st.floats(-5, 5), ty=st.floats(-5, 5))
    def test_similarity_invariance(self, angle, scale, tx, ty):
        tri = Polyhedron.from_vertices([[0, 0], [1.3, 0], [0.2, 0.9]])
        rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        moved = tri.transformed(rot=rot, shift=np.array([tx, ty]), scale=scale)
        assert shape_stats(moved).rotondity == pytest.approx(
            shape_stats(tri).rotondity, abs=1e-9)
        assert 0.0 <= shape_stats(moved).rotondity <= 1.0

    def test_min_enclosing_ball_simple(self):
        c, r = min_enclosing_ball(np.array([[0.0, 0], [2, 0], [1, 0.2]]))
        assert r == pytest.approx(1.0, abs=1e-9)
        assert np.allclose(c, [1, 0], atol=1e-7)


class TestComplex:
    def test_shared_edge_passes(self):
        S = grid2(2, 1)
        assert validate_complex(S).ok

    def test_overlap_fails(self):
        a = unit_square()
        b = Polyhedron.from_box(np.array([0.5, 0.0]), np.array([1.5, 1.0]))
        rep = validate_complex(Complex([a, b]))
        assert not rep.ok
        assert len(rep.violations) >= 1

    def test_half_edge_share_fails(self):
        a = unit_square()
        b = Polyhedron.from_box(np.array([1.0, 0.0]), np.array([1.5, 0.5]))
        C = Complex([a, b])
        rep = validate_complex(C)
        assert not rep.ok
        # the violating pair must include two edges on the x = 1 line whose
        # interiors overlap on the open segment (1,0)-(1,0.5)
        found = False
        for i, j in rep.violations:
            pi, pj = C.face(i).poly, C.face(j).poly
            if pi.dim == pj.dim == 1:
                if np.all(np.abs(pi.vertices[:, 0] - 1) < 1e-9) and \
                        np.all(np.abs(pj.vertices[:, 0] - 1) < 1e-9):
                    found = True
        assert found

    def test_boundary_faces_single_square(self):
        S = grid2(1, 1)
        assert len(S.boundary_faces()) == 4

    def test_boundary_faces_2x2(self):
        S = grid2(2, 2)
        assert len(S.boundary_faces()) == 8

    def test_boundary_faces_2x1(self):
        S = grid2(2, 1)
        assert len(S.boundary_faces()) == 6

    def test_boundary_union_is_topological_boundary(self, rng):
        S = grid2(2, 2)
        bids = S.boundary_faces()
        for _ in range(300):
            x = rng.uniform(-0.2, 2.2, size=2)
            on_boundary = any(S.face(f).poly.contains(x, margin=1e-9) for f in bids)
            inside = 0.0 <= x[0] <= 2.0 and 0.0 <= x[1] <= 2.0
            topo_boundary = inside and (
                min(x[0], 2 - x[0]) < 1e-9 or min(x[1], 2 - x[1]) < 1e-9)
            if topo_boundary:
                assert on_boundary
            if on_boundary:
                assert abs(x[0]) < 1e-9 or abs(x[0] - 2) < 1e-9 \
                    or abs(x[1]) < 1e-9 or abs(x[1] - 2) < 1e-9

    def test_aggregate_stats_recompute(self):
        S = grid2(2, 2, stride=0.5)
        cached = S.aggregate_stats()
        fresh = S.recompute_stats()
        assert cached.rotondity == pytest.approx(fresh.rotondity, abs=1e-12)
        assert cached.rotondity == pytest.approx(1 / np.sqrt(2), abs=1e-9)


class TestHalfSpaceMinimality:
    def test_redundant_constraint_pruned(self):
        hs = box_halfspaces(2) + [HalfSpace(np.array([1.0, 0.0]), 5.0)]
        p = Polyhedron.from_halfspaces(hs)
        assert len(p.half_spaces) == 4
        # removing any remaining half-space strictly enlarges the region:
        # each one is tight on a full edge of the square
        for h in p.half_spaces:
            on = p.vertices[np.abs(p.vertices @ h.normal - h.offset) < 1e-9]
            assert len(on) == 2
