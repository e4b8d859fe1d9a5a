import math

import numpy as np
import pytest

from skelmin.errors import CenterHit, SubdivisionLimit
from skelmin.geometry import Polyhedron
from skelmin.measure import hausdorff_measure
from skelmin.projection import (ConeRegion, IdentityStage, MapStage, PiecewiseMap,
                                RadialStage, apply_map, blend_check, erode,
                                ff_cascade, fit_patches, hole_extension,
                                magnetic_project, optimal_center, radial_project,
                                radial_image_measure, ring_extension)
from skelmin.measure import Window
from skelmin.simplicial import SimplicialSet, faces_to_set

from conftest import edge_id, grid2, grid3, unit_square


def cone2d(r=1.0, u=0.3):
    return ConeRegion(np.zeros(2), r, u, np.array([[1.0, 0.0]]))


class TestMagneticProjection:
    def test_fixes_plane_points(self):
        K = cone2d()
        p = np.array([[0.4, 0.0]])
        assert np.allclose(magnetic_project(K, 0.2, p), p, atol=1e-12)

    def test_identity_outside_rho_neighborhood(self):
        K = cone2d()
        far = np.array([[2.5, 2.5], [-3.0, 0.1]])
        assert np.allclose(magnetic_project(K, 0.2, far), far, atol=1e-12)

    def test_projects_inside_region(self):
        K = cone2d()
        p = np.array([[0.5, 0.1]])  # inside the cone ball
        assert K.contains(p)[0]
        out = magnetic_project(K, 0.2, p)
        assert np.allclose(out, [[0.5, 0.0]], atol=1e-12)

    def test_image_of_neighborhood_stays_in_neighborhood(self, rng):
        K = cone2d()
        rho = 0.25
        pts = rng.uniform(-1.5, 1.5, size=(500, 2))
        near = pts[K.distance(pts) <= rho]
        out = magnetic_project(K, rho, near)
        assert np.all(K.distance(out) <= rho + 1e-9)

    @pytest.mark.parametrize("r,u,rho", [(1.0, 0.3, 0.2), (0.5, 0.8, 0.1), (2.0, 0.15, 0.6)])
    def test_sampled_lipschitz_bound(self, r, u, rho, rng):
        K = ConeRegion(np.array([0.2, -0.1]), r, u, np.array([[1.0, 0.0]]))
        pts = rng.uniform(-1.5 * r, 1.5 * r, size=(2000, 2)) + np.array([0.2, -0.1])
        img = magnetic_project(K, rho, pts)
        i = rng.integers(0, len(pts), size=100_000)
        j = rng.integers(0, len(pts), size=100_000)
        m = i != j
        num = np.linalg.norm(img[i[m]] - img[j[m]], axis=1)
        den = np.linalg.norm(pts[i[m]] - pts[j[m]], axis=1)
        bound = 2.0 + K.plane_gap() / rho
        assert (num / den).max() <= bound + 1e-6


class TestExtensions:
    def test_ring_extension_boundary_conditions(self):
        K = cone2d()
        f = lambda x: K.plane_project(x[None, :])[0]
        retr = lambda x: x if K.contains(x[None, :])[0] else K.disk_project(x[None, :])[0]
        inside = np.array([0.4, 0.05])
        out = ring_extension(f, retr, K.distance, 0.2, inside)
        assert np.allclose(out, f(inside), atol=1e-12)
        # beyond the rim along the plane the distance is exactly a - r, so
        # this point sits at distance rho where the extension is the identity
        shifted = np.array([1.2, 0.0])
        assert K.distance(shifted[None, :])[0] == pytest.approx(0.2, abs=1e-12)
        assert np.allclose(ring_extension(f, retr, K.distance, 0.2, shifted),
                           shifted, atol=1e-9)

    def test_hole_extension_boundary_conditions(self):
        center = np.zeros(2)
        f = lambda y: y + np.array([0.05, 0.0])
        inside = np.array([0.1, 0.0])  # within rho*B, rho=0.5, r=1
        assert np.allclose(hole_extension(f, center, 1.0, 0.5, inside), inside)
        on_sphere = np.array([0.0, 1.0])
        assert np.allclose(hole_extension(f, center, 1.0, 0.5, on_sphere), f(on_sphere),
                           atol=1e-9)
        annulus = np.array([0.75, 0.0])
        out = hole_extension(f, center, 1.0, 0.5, annulus)
        u = (1.0 - 0.75) / 0.5
        want = u * annulus + (1 - u) * f(np.array([1.0, 0.0]))
        assert np.allclose(out, want, atol=1e-12)


class TestRadialProjection:
    def test_boundary_fixed(self):
        sq = unit_square()
        p = np.array([1.0, 0.3])
        assert np.allclose(radial_project(sq, [0.5, 0.5], p), p, atol=1e-9)

    def test_ray_example(self):
        sq = unit_square()
        out = radial_project(sq, [0.5, 0.5], [0.75, 0.5])
        assert np.allclose(out, [1.0, 0.5], atol=1e-12)

    def test_center_hit(self):
        with pytest.raises(CenterHit):
            radial_project(unit_square(), [0.5, 0.5], [0.5, 0.5])

    def test_sampled_lipschitz_scale_bound(self, rng):
        sq = unit_square()
        stats = sq.shape_stats()
        center = stats.inscribed_center + rng.uniform(-0.1, 0.1, size=2)
        r = stats.inner_radius
        pts = []
        while len(pts) < 400:
            x = rng.uniform(0, 1, size=2)
            if np.linalg.norm(x - center) >= r / 4:
                pts.append(x)
        pts = np.array(pts)
        img = np.array([radial_project(sq, center, p) for p in pts])
        i = rng.integers(0, len(pts), 20000)
        j = rng.integers(0, len(pts), 20000)
        m = i != j
        ratio = (np.linalg.norm(img[i[m]] - img[j[m]], axis=1)
                 / np.linalg.norm(pts[i[m]] - pts[j[m]], axis=1)).max()
        bound = (4.0 / stats.rotondity) * (sq.diameter() / r)
        assert ratio <= bound + 1e-6
        # image always on the boundary
        for q in img:
            assert min(q.min(), (1 - q).min()) < 1e-9


class TestApplyMap:
    def test_identity(self):
        E = SimplicialSet.from_simplices(np.array([[[0.0, 0], [1, 0]]]))
        res = apply_map(IdentityStage(), E)
        assert np.allclose(res.image.simplices, E.simplices)

    def test_affine_exact_no_subdivision(self):
        E = SimplicialSet.from_simplices(np.array([[[0.0, 0], [1, 0], [0, 1]]]))
        from skelmin.projection import AffineStage

        st = AffineStage(2.0 * np.eye(2), np.array([1.0, -1.0]))
        res = apply_map(st, E)
        assert res.max_depth == 0
        assert res.image.measure() == pytest.approx(4 * E.measure(), abs=1e-12)

    def test_radial_stage_matches_polyline_oracle(self):
        sq = unit_square()
        center = np.array([0.35, 0.65])
        seg = np.array([[0.2, 0.3], [0.8, 0.75]])
        E = SimplicialSet.from_simplices(seg[None, :])
        res = apply_map(RadialStage(sq, center), E, tol=1e-4)
        # dense polyline pushforward oracle
        t = np.linspace(0, 1, 1001)
        pts = seg[0] + t[:, None] * (seg[1] - seg[0])
        img = np.array([radial_project(sq, center, p) for p in pts])
        oracle = float(np.linalg.norm(np.diff(img, axis=0), axis=1).sum())
        assert res.image.measure() == pytest.approx(oracle, rel=2e-3)

    def test_subdivision_limit(self):
        class Wiggle(MapStage):
            kind = "wiggle"

            def apply(self, pts):
                pts = np.atleast_2d(pts)
                out = pts.copy()
                x = np.maximum(np.abs(pts[:, 0]), 1e-12)
                out[:, 1] = pts[:, 1] + 0.05 * np.sin(1.0 / x)
                return out

        E = SimplicialSet.from_simplices(np.array([[[1e-9, 0.0], [1.0, 0.0]]]))
        with pytest.raises(SubdivisionLimit):
            apply_map(Wiggle(), E, tol=1e-7, depth_cap=12)


class TestOptimalCenter:
    def test_point_content_projects_to_zero(self):
        sq = unit_square()
        E = SimplicialSet.from_simplices(np.array([[[0.3, 0.3], [0.3, 0.3]]]))
        choice = optimal_center(sq, E, n_candidates=16, seed=1)
        assert choice.measure == pytest.approx(0.0, abs=1e-12)

    def test_mid_segment_within_twice_dense_mean(self):
        sq = unit_square()
        E = SimplicialSet.from_simplices(np.array([[[0.0, 0.5], [1.0, 0.5]]]))
        choice = optimal_center(sq, E, n_candidates=64, seed=2)
        assert choice.within_mean_bound
        # dense 50x50 grid quadrature oracle over the half inscribed ball
        stats = sq.shape_stats()
        vals = []
        for gx in np.linspace(-0.5, 0.5, 50):
            for gy in np.linspace(-0.5, 0.5, 50):
                c = stats.inscribed_center + stats.inner_radius * 0.5 * np.array([gx, gy]) * 2
                if np.linalg.norm(c - stats.inscribed_center) > 0.5 * stats.inner_radius:
                    continue
                if abs(c[1] - 0.5) < stats.inner_radius / 100:
                    continue
                vals.append(radial_image_measure(sq, c, E))
        dense_mean = float(np.mean(vals))
        assert choice.measure <= 2.0 * dense_mean + 1e-6

    def test_boundary_content_identity(self):
        sq = unit_square()
        E = faces_to_set(grid2(1, 1), grid2(1, 1).faces_of_dim(1), 1)
        choice = optimal_center(sq, E, n_candidates=16, seed=3)
        assert choice.measure == pytest.approx(E.measure(), abs=1e-9)


class TestCascade:
    def test_already_in_skeleton_identity(self):
        S = grid2(1, 1)
        E = faces_to_set(S, S.faces_of_dim(1)[:2], 1)
        img, _pm, ledger = ff_cascade(S, E, 1, n_candidates=8, seed=0)
        assert img.measure() == pytest.approx(E.measure(), abs=1e-9)
        assert all(abs(r.ratio - 1.0) < 1e-9 for r in ledger)

    def test_diagonal_lands_on_edges_with_bounded_ratio(self):
        S = grid2(1, 1)
        E = SimplicialSet.from_simplices(np.array([[[0.1, 0.1], [0.9, 0.9]]]))
        img, _pm, ledger = ff_cascade(S, E, 1, n_candidates=64, seed=1)
        for s in img.simplices:
            for v in s:
                assert min(v.min(), (1 - v).min()) < 1e-9
        ratio = img.measure() / E.measure()
        rot = S.aggregate_stats().rotondity
        # exhaustive center-grid oracle: the best possible single-center ratio
        best = math.inf
        for gx in np.linspace(0.3, 0.7, 21):
            for gy in np.linspace(0.3, 0.7, 21):
                c = np.array([gx, gy])
                if abs(gx - gy) < 1e-3:
                    continue
                best = min(best, radial_image_measure(S.face(S.cells[0]).poly, c, E))
        assert ratio <= 2.0 * (best / E.measure()) * rot ** (-2) + 1e-6

    def test_locality_in_3d(self):
        S = grid3(2, 1, 1)
        tri = np.array([[[0.2, 0.3, 0.4], [0.5, 0.35, 0.45], [0.3, 0.6, 0.5]]])
        E = SimplicialSet.from_simplices(tri)
        img, _pm, _ledger = ff_cascade(S, E, 2, n_candidates=8, seed=2)
        # image must stay within the closure of the first cube
        for s in img.simplices:
            assert np.all(s >= -1e-9) and np.all(s[:, 0] <= 1 + 1e-9)
        # and on its 2-faces
        for s in img.simplices:
            for v in s:
                assert min(v.min(), min(1 - v[1], 1 - v[2]), abs(v[0] - 1), 1 - v[0]) < 1e-9

    def test_idempotent(self):
        S = grid2(2, 2, stride=0.5)
        E = SimplicialSet.from_simplices(np.array([[[0.1, 0.15], [0.85, 0.8]]]))
        img1, _, _ = ff_cascade(S, E, 1, n_candidates=16, seed=3)
        img2, _, ledger2 = ff_cascade(S, img1, 1, n_candidates=16, seed=4)
        assert img2.measure() == pytest.approx(img1.measure(), abs=1e-9)
        assert all(abs(r.ratio - 1) < 1e-9 for r in ledger2)


class TestErode:
    def test_full_edges_fixed_point(self):
        S = grid2(2, 1)
        ids = S.faces_of_dim(1)[:3]
        E = faces_to_set(S, ids, 1)
        skel = erode(S, E, 1)
        assert {f for f in skel.face_ids} == set(ids) - _implied(S, ids)
        again = erode(S, skel, 1)
        assert again.face_ids == skel.face_ids

    def test_partial_edge_collapses(self):
        S = grid2(2, 1)
        e0 = edge_id(S, [0, 0], [1, 0])
        e1 = edge_id(S, [1, 0], [2, 0])
        e2 = edge_id(S, [0, 0], [0, 1])
        full = faces_to_set(S, [e0, e1], 1)
        a = S.face(e2).poly.vertices[0]
        b = S.face(e2).poly.vertices[1]
        half = SimplicialSet.from_simplices(np.array([[a, 0.5 * (a + b)]]))
        skel = erode(S, full.extend(half), 1)
        dfaces = {f for f in skel.face_ids if S.face(f).dim == 1}
        assert dfaces == {e0, e1}
        assert hausdorff_measure(skel.face_ids, S, 1) == pytest.approx(2.0, abs=1e-12)

    def test_empty(self):
        S = grid2(1, 1)
        skel = erode(S, SimplicialSet.empty(1, 2), 1)
        assert skel.face_ids == frozenset()

    def test_measure_never_increases_2d_faces(self):
        S = grid3(1, 1, 1)
        # cover one 2-face fully and another partially
        fids = S.faces_of_dim(2)
        full = faces_to_set(S, fids[:1], 2)
        part_poly = S.face(fids[1]).poly
        ring = [part_poly.vertices[i] for i in part_poly.hull_order()]
        c = part_poly.interior_point()
        tri = np.array([[ring[0], ring[1], c]])
        E = full.extend(SimplicialSet.from_simplices(tri))
        skel = erode(S, E, 2)
        assert hausdorff_measure(skel.face_ids, S, 2) <= E.measure() + 1e-9


def _implied(S, ids):
    implied = set()
    for fid in ids:
        stack = list(S.children.get(fid, ()))
        while stack:
            cur = stack.pop()
            implied.add(cur)
            stack.extend(S.children.get(cur, ()))
    return implied


class TestFitPatches:
    def test_single_flat_triangle(self):
        E = SimplicialSet.from_simplices(np.array([[[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]]))
        patches = fit_patches(E, epsilon=0.1, max_patches=8, seed=0)
        assert len(patches) == 1
        assert patches[0].leakage == pytest.approx(0.0, abs=1e-12)

    def test_two_distant_triangles(self):
        tris = np.array([[[0.0, 0, 0], [1, 0, 0], [0, 1, 0]],
                         [[10.0, 0, 5], [11, 0, 5], [10, 1, 5]]])
        E = SimplicialSet.from_simplices(tris)
        patches = fit_patches(E, epsilon=0.1, max_patches=8, seed=0)
        assert len(patches) == 2

    def test_square_boundary(self):
        S = grid2(1, 1)
        E = faces_to_set(S, S.faces_of_dim(1), 1)
        patches = fit_patches(E, epsilon=0.1, max_patches=32, seed=0)
        assert len(patches) >= 4
        assert all(p.leakage <= 0.1 + 1e-12 for p in patches)
        # disjointness of patch balls
        for i, a in enumerate(patches):
            for b in patches[i + 1:]:
                assert np.linalg.norm(a.center - b.center) >= \
                    a.r * (1 + a.rho) + b.r * (1 + b.rho) - 1e-9


class TestBlendCheck:
    def test_equal_maps_pass(self):
        phi = PiecewiseMap([])
        w = Window(np.zeros(2), np.ones(2))
        rep = blend_check(phi, phi, rho=0.1, window=w)
        assert rep.passed

    def test_boundary_touching_support_fails(self):
        class ShiftAll(MapStage):
            def apply(self, pts):
                return np.atleast_2d(pts) + np.array([0.01, 0.0])

        w = Window(np.zeros(2), np.ones(2))
        rep = blend_check(PiecewiseMap([]), PiecewiseMap([ShiftAll()]), rho=0.1, window=w)
        assert not rep.passed

    def test_exact_rho_gap_fails(self):
        class ShiftCenterPatch(MapStage):
            def apply(self, pts):
                pts = np.atleast_2d(pts).copy()
                mask = np.linalg.norm(pts - 0.5, axis=1) < 0.05
                pts[mask] += np.array([0.1, 0.0])
                return pts

        w = Window(np.zeros(2), np.ones(2))
        rep = blend_check(PiecewiseMap([]), PiecewiseMap([ShiftCenterPatch()]),
                          rho=0.1, window=w, n_samples=4096)
        # sup norm equals rho exactly: strict inequality required
        assert rep.sup_norm == pytest.approx(0.1, abs=1e-12)
        assert not rep.passed


class TestOptimalCenterRejection:
    def test_no_center_found_when_content_covers_ball(self):
        from skelmin.errors import NoCenterFound

        sq = unit_square()
        stats = sq.shape_stats()
        # cover the half inscribed ball with horizontal segments spaced below
        # twice the clearance (inradius / 100), so every candidate is rejected
        ys = np.arange(0.2, 0.8001, 0.004)
        segs = np.array([[[0.1, y], [0.9, y]] for y in ys])
        E = SimplicialSet.from_simplices(segs)
        with pytest.raises(NoCenterFound):
            optimal_center(sq, E, n_candidates=16, seed=0)


class TestApplyMapRefinement:
    def test_cauchy_refinement_between_tolerances(self):
        sq = unit_square()
        st = RadialStage(sq, np.array([0.35, 0.65]))
        E = SimplicialSet.from_simplices(np.array([[[0.2, 0.3], [0.8, 0.75]]]))
        tol = 1e-3
        m1 = apply_map(st, E, tol=tol).image.measure()
        m2 = apply_map(st, E, tol=tol / 2).image.measure()
        assert abs(m2 - m1) < tol * max(m1, 1.0)
