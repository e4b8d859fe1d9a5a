"""Projection maps acting on simplicial sets with measure accounting.

Magnetic projections flatten content onto a plane inside a cone-ball region;
radial projections push face content onto face boundaries. Restricted to one
exit cone, a radial projection is projective, so simplex images are simplices
and pushforwards are exact; generic stages fall back to adaptive longest-edge
subdivision of the sources.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CenterHit, NoCenterFound, SubdivisionLimit
from .geometry import Polyhedron, enumerate_subfaces
from .simplicial import (SimplicialSet, clip_simplex_to_halfspaces, simplex_volume,
                         subdivide_longest_edge)
from .tol import DEFAULT_TOL


# -- regions -----------------------------------------------------------------


@dataclass(frozen=True)
class ConeRegion:
    """Intersection of the ball B(apex, radius) with the cone of aperture u
    around the d-plane H = apex + span(plane_basis)."""

    apex: np.ndarray
    radius: float
    aperture: float
    plane_basis: np.ndarray  # (d, n) orthonormal rows

    def __post_init__(self):
        object.__setattr__(self, "apex", np.asarray(self.apex, dtype=float))
        object.__setattr__(self, "plane_basis", np.atleast_2d(np.asarray(self.plane_basis, dtype=float)))

    def plane_project(self, pts):
        rel = np.atleast_2d(pts) - self.apex
        return self.apex + rel @ self.plane_basis.T @ self.plane_basis

    def split_coords(self, pts):
        """(a, b): distance along the plane from the apex, distance to plane."""
        pts = np.atleast_2d(pts)
        rel = pts - self.apex
        tang = rel @ self.plane_basis.T
        a = np.linalg.norm(tang, axis=1)
        b = np.sqrt(np.maximum((rel ** 2).sum(axis=1) - a ** 2, 0.0))
        return a, b

    def contains(self, pts, eps=1e-12):
        a, b = self.split_coords(pts)
        rad = np.sqrt(a ** 2 + b ** 2)
        return (rad <= self.radius + eps) & (b <= self.aperture * rad + eps)

    def distance(self, pts):
        """Exact distance to the region via its planar cross-section."""
        a, b = self.split_coords(pts)
        r = self.radius
        u = self.aperture
        out = np.zeros(len(a))
        if u >= 1.0:
            rad = np.sqrt(a ** 2 + b ** 2)
            return np.maximum(rad - r, 0.0)
        kappa = u / math.sqrt(1.0 - u * u)
        slant = np.array([1.0, kappa]) / math.sqrt(1.0 + kappa * kappa)
        theta_max = math.atan(kappa)
        for i in range(len(a)):
            q = np.array([a[i], b[i]])
            rad = np.hypot(a[i], b[i])
            if rad <= r + 1e-15 and b[i] <= u * rad + 1e-15:
                continue
            t = float(np.clip(q @ slant, 0.0, r))
            q1 = t * slant
            th = float(np.clip(math.atan2(b[i], a[i]), 0.0, theta_max))
            q2 = r * np.array([math.cos(th), math.sin(th)])
            out[i] = min(np.linalg.norm(q - q1), np.linalg.norm(q - q2))
        return out

    def disk_project(self, pts):
        """Projection onto the convex set H & K (a d-disk around the apex)."""
        pts = np.atleast_2d(pts)
        rel = (pts - self.apex) @ self.plane_basis.T
        a = np.linalg.norm(rel, axis=1)
        scale = np.where(a > self.radius, self.radius / np.maximum(a, 1e-300), 1.0)
        return self.apex + (rel * scale[:, None]) @ self.plane_basis

    def plane_gap(self):
        """Hausdorff distance between H & K and K."""
        return self.radius * min(self.aperture, 1.0)


def magnetic_project(region: ConeRegion, rho, pts):
    """rho-magnetic projection onto the region's plane inside the region.

    Equals the orthogonal plane projection on K, the identity outside the
    rho-neighborhood of K, and the ring interpolation in between.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    d = region.distance(pts)
    t = np.clip(d / rho, 0.0, 1.0)
    flat = region.disk_project(pts)
    out = (1.0 - t)[:, None] * flat + t[:, None] * pts
    inside = region.contains(pts)
    out[inside] = region.plane_project(pts[inside])
    return out


def ring_extension(f, retraction, dist_fn, rho, x):
    """Explicit ring extension: f on K, identity on the rho-shell boundary."""
    x = np.asarray(x, dtype=float)
    d = float(dist_fn(x[None, :])[0])
    if d >= rho:
        return x.copy()
    t = d / rho
    return (1.0 - t) * np.asarray(f(retraction(x)), dtype=float) + t * x


def hole_extension(f, center, r, rho, y):
    """Extension inside a ball: identity on rho*B, f outside B, interpolation
    u(y) y + (1 - u(y)) f(Pi(y)) in the annulus."""
    y = np.asarray(y, dtype=float)
    center = np.asarray(center, dtype=float)
    dist = float(np.linalg.norm(y - center))
    if dist >= r - 1e-15:
        return np.asarray(f(y), dtype=float)
    if dist <= rho * r:
        return y.copy()
    pi_y = center + r * (y - center) / dist
    u = np.linalg.norm(pi_y - y) / (r * (1.0 - rho))
    return u * y + (1.0 - u) * np.asarray(f(pi_y), dtype=float)


# -- radial projection -------------------------------------------------------


def radial_project(face: Polyhedron, center, pt, tol=DEFAULT_TOL):
    """Intersection of the ray [center, pt) with the face boundary."""
    center = np.asarray(center, dtype=float)
    pt = np.asarray(pt, dtype=float)
    d = pt - center
    if np.linalg.norm(d) <= tol.geo:
        raise CenterHit("radial projection evaluated at its center")
    t_best = np.inf
    for h in face.half_spaces:
        den = float(h.normal @ d)
        if den > 1e-15:
            t = (h.offset - float(h.normal @ center)) / den
            t_best = min(t_best, t)
    if not np.isfinite(t_best):
        raise CenterHit("ray does not leave the face (degenerate direction)")
    return center + t_best * d


def _facet_halfspace(face: Polyhedron, facet: Polyhedron, tol):
    for h in face.half_spaces:
        vals = facet.vertices @ h.normal - h.offset
        if np.all(np.abs(vals) <= 1e3 * tol.geo * max(1.0, abs(h.offset))):
            return h
    raise ValueError("facet does not match any defining half-space")


def _exit_cone(face: Polyhedron, facet: Polyhedron, center, tol):
    """Region of the face whose radial exit goes through the given facet."""
    k = face.dim
    if k == 2:
        p, q = facet.vertices[0], facet.vertices[1]
        return Polyhedron.from_vertices([center, p, q], tol)
    if k == 3:
        order = facet.hull_order()
        ring = [facet.vertices[i] for i in order]
        if len(ring) == 3:
            return Polyhedron.from_simplex(np.vstack([ring, center[None, :]]), tol)
        if len(ring) == 4:
            return Polyhedron.from_pyramid(np.array(ring), center, tol)
        raise ValueError("exit cones support triangle/quad facets")
    raise ValueError("exit cones defined for faces of dimension 2 or 3")


def radial_pushforward(face: Polyhedron, center, pieces, tol=DEFAULT_TOL,
                       facets=None):
    """Exact image of d-dim simplices under the radial projection of a face.

    Returns a list of (facet_index, image_simplex). Restricted to each exit
    cone the projection is projective, so vertex images span the exact image.
    """
    center = np.asarray(center, dtype=float)
    if facets is None:
        facets = enumerate_subfaces(face).levels[face.dim - 1]
    out = []
    for fi, facet in enumerate(facets):
        h = _facet_halfspace(face, facet, tol)
        cone = _exit_cone(face, facet, center, tol)
        A = np.array([hs.normal for hs in cone.half_spaces])
        b = np.array([hs.offset for hs in cone.half_spaces])
        num = h.offset - float(h.normal @ center)
        for s in pieces:
            for piece in clip_simplex_to_halfspaces(s, A, b):
                if simplex_volume(piece) <= tol.geo:
                    continue
                den = (piece - center) @ h.normal
                if np.any(den <= 1e-14):
                    # graze through the apex: split and retry on the halves
                    kids = subdivide_longest_edge(piece)
                    for kid in kids:
                        denk = (kid - center) @ h.normal
                        if np.any(denk <= 1e-14):
                            continue
                        img = center + (kid - center) * (num / denk)[:, None]
                        out.append((fi, img))
                    continue
                img = center + (piece - center) * (num / den)[:, None]
                out.append((fi, img))
    return out


# -- map stages and generic application --------------------------------------


class MapStage:
    is_affine = False
    kind = "stage"

    def apply(self, pts):
        raise NotImplementedError


class IdentityStage(MapStage):
    is_affine = True
    kind = "identity"

    def apply(self, pts):
        return np.atleast_2d(np.asarray(pts, dtype=float)).copy()


class AffineStage(MapStage):
    is_affine = True
    kind = "affine"

    def __init__(self, matrix, shift):
        self.matrix = np.asarray(matrix, dtype=float)
        self.shift = np.asarray(shift, dtype=float)

    def apply(self, pts):
        return np.atleast_2d(pts) @ self.matrix.T + self.shift


class MagneticStage(MapStage):
    kind = "magnetic"

    def __init__(self, region: ConeRegion, rho):
        self.region = region
        self.rho = float(rho)

    def apply(self, pts):
        return magnetic_project(self.region, self.rho, pts)


class RadialStage(MapStage):
    kind = "radial"

    def __init__(self, face: Polyhedron, center, face_id=None):
        self.face = face
        self.center = np.asarray(center, dtype=float)
        self.face_id = face_id

    def apply(self, pts):
        pts = np.atleast_2d(pts)
        out = np.array([radial_project(self.face, self.center, p) for p in pts])
        return out


@dataclass
class PiecewiseMap:
    """Ordered composition of stages; identity outside their supports."""

    stages: list = field(default_factory=list)

    def apply(self, pts):
        cur = np.atleast_2d(np.asarray(pts, dtype=float)).copy()
        for st in self.stages:
            cur = st.apply(cur)
        return cur


@dataclass
class MapResult:
    image: SimplicialSet
    collapsed_measure: float
    max_depth: int


def apply_map(stage: MapStage, E: SimplicialSet, tol=1e-4, depth_cap=12,
              geom_tol=DEFAULT_TOL) -> MapResult:
    """Push a simplicial set through one stage.

    Affine stages map simplices exactly. Other stages bisect each simplex
    level by level until the piecewise-linear image measure changes by less
    than tol (relative) between levels; exceeding the depth cap raises
    SubdivisionLimit.
    """
    if len(E) == 0:
        return MapResult(E, 0.0, 0)
    if stage.is_affine:
        img = E.transformed(stage.apply)
        pruned, dropped = img.pruned(geom_tol.geo)
        return MapResult(pruned, dropped, 0)

    out = []
    max_depth = 0
    for s in E.simplices:
        frags = [s]
        prev = sum(simplex_volume(stage.apply(f)) for f in frags)
        depth = 0
        while True:
            frags = [kid for f in frags for kid in subdivide_longest_edge(f)]
            depth += 1
            cur = sum(simplex_volume(stage.apply(f)) for f in frags)
            if abs(cur - prev) <= tol * max(abs(cur), 1e-12):
                break
            if depth >= depth_cap:
                raise SubdivisionLimit(
                    f"image measure not converged at depth {depth_cap}")
            prev = cur
        max_depth = max(max_depth, depth)
        out.extend(stage.apply(f) for f in frags)
    img = SimplicialSet(np.array(out), E.dim, [{} for _ in out])
    pruned, dropped = img.pruned(geom_tol.geo)
    return MapResult(pruned, dropped, max_depth)


# -- optimal centers ---------------------------------------------------------


def _dist_point_segment(p, a, b):
    d = b - a
    den = float(d @ d)
    t = 0.0 if den <= 1e-300 else float(np.clip((p - a) @ d / den, 0.0, 1.0))
    return float(np.linalg.norm(a + t * d - p))


def _dist_point_triangle(p, tri):
    a, b, c = tri
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = float(ab @ ap), float(ac @ ap)
    if d1 <= 0 and d2 <= 0:
        return float(np.linalg.norm(ap))
    bp = p - b
    d3, d4 = float(ab @ bp), float(ac @ bp)
    if d3 >= 0 and d4 <= d3:
        return float(np.linalg.norm(bp))
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        t = d1 / (d1 - d3)
        return float(np.linalg.norm(a + t * ab - p))
    cp = p - c
    d5, d6 = float(ab @ cp), float(ac @ cp)
    if d6 >= 0 and d5 <= d6:
        return float(np.linalg.norm(cp))
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        t = d2 / (d2 - d6)
        return float(np.linalg.norm(a + t * ac - p))
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return float(np.linalg.norm(b + t * (c - b) - p))
    denom = 1.0 / (va + vb + vc)
    v, w = vb * denom, vc * denom
    return float(np.linalg.norm(a + ab * v + ac * w - p))


def dist_to_set(p, E: SimplicialSet):
    p = np.asarray(p, dtype=float)
    best = math.inf
    for s in E.simplices:
        if E.dim == 1:
            best = min(best, _dist_point_segment(p, s[0], s[1]))
        else:
            best = min(best, _dist_point_triangle(p, s))
    return best


@dataclass
class CenterChoice:
    center: np.ndarray
    measure: float
    candidate_mean: float
    n_evaluated: int

    @property
    def within_mean_bound(self):
        return self.measure <= 2.0 * self.candidate_mean + 1e-12


def radial_image_measure(face: Polyhedron, center, E: SimplicialSet,
                         tol=DEFAULT_TOL, facets=None):
    imgs = radial_pushforward(face, np.asarray(center, dtype=float),
                              list(E.simplices), tol, facets=facets)
    return float(sum(simplex_volume(s) for _, s in imgs))


def optimal_center(face: Polyhedron, E: SimplicialSet, n_candidates=64,
                   seed=0, tol=DEFAULT_TOL) -> CenterChoice:
    """Sample centers in the half inscribed ball, keep the best projection.

    Candidates closer than (inradius / 100) to the content are rejected; the
    winner's measure never exceeds twice the candidate mean, mirroring the
    mean-value selection the bound comes from.
    """
    if E.dim >= face.dim:
        raise ValueError("content dimension must be below the face dimension")
    stats = face.shape_stats()
    ball_r = 0.5 * stats.inner_radius
    clear = stats.inner_radius / 100.0
    rng = np.random.default_rng(seed)
    k = face.dim
    basis = face.basis
    facets = enumerate_subfaces(face).levels[face.dim - 1]
    evals = []
    best = None
    for _ in range(n_candidates):
        g = rng.normal(size=k)
        g /= max(np.linalg.norm(g), 1e-300)
        rad = ball_r * rng.uniform() ** (1.0 / k)
        cand = stats.inscribed_center + (rad * g) @ basis
        if len(E) and dist_to_set(cand, E) < clear:
            continue
        m = radial_image_measure(face, cand, E, tol, facets=facets)
        evals.append(m)
        if best is None or m < best[1] - 1e-15:
            best = (cand, m)
    if best is None:
        raise NoCenterFound("all sampled centers were rejected")
    mean = float(np.mean(evals))
    return CenterChoice(best[0], float(best[1]), mean, len(evals))


# -- Federer-Fleming cascade ---------------------------------------------------


@dataclass
class CascadeRow:
    level: int
    faces_touched: int
    measure_before: float
    measure_after: float

    @property
    def ratio(self):
        if self.measure_before <= 0.0:
            return 1.0
        return self.measure_after / self.measure_before


def assign_to_faces(S, E: SimplicialSet, tol=DEFAULT_TOL):
    """Split a set along cells and attach each piece to its lowest containing
    face. Pieces on shared subfaces are attached once (owner = smallest cell
    id)."""
    content = {}
    if len(E) == 0:
        return content
    cell_ids = list(S.cells)
    boxes = [(S.face(c).poly.vertices.min(axis=0), S.face(c).poly.vertices.max(axis=0))
             for c in cell_ids]
    for s in E.simplices:
        slo, shi = s.min(axis=0), s.max(axis=0)
        for cid, (lo, hi) in zip(cell_ids, boxes):
            if np.any(slo > hi + 1e-9) or np.any(shi < lo - 1e-9):
                continue
            poly = S.face(cid).poly
            A = np.array([h.normal for h in poly.half_spaces])
            b = np.array([h.offset for h in poly.half_spaces])
            for piece in clip_simplex_to_halfspaces(s, A, b):
                if simplex_volume(piece) <= tol.geo:
                    continue
                bary = piece.mean(axis=0)
                owners = [c for c in cell_ids if S.face(c).poly.contains(bary, margin=1e-9)]
                if not owners or min(owners) != cid:
                    continue
                fid = _lowest_face(S, cid, piece)
                content.setdefault(fid, []).append(piece)
    return content


def _lowest_face(S, cell_id, piece, margin=1e-9):
    best = cell_id
    best_dim = S.face(cell_id).dim
    for fid in S.cell_faces[cell_id]:
        f = S.face(fid)
        if f.dim >= best_dim:
            continue
        if all(f.poly.contains(v, margin=margin) for v in piece):
            best, best_dim = fid, f.dim
    return best


def _child_id_lookup(S, face_id, facets):
    ids = []
    for facet in facets:
        key = S._face_key(facet)
        ids.append(S._key_to_id[key])
    return ids


def ff_cascade(S, E: SimplicialSet, d, n_candidates=64, seed=0, tol=DEFAULT_TOL):
    """Push the set into the d-skeleton by radial projections, dimension by
    dimension, choosing centers by sampled measure minimization.

    Returns (image set, piecewise map, ledger rows)."""
    content = assign_to_faces(S, E, tol)
    stages = []
    ledger = []
    rng = np.random.default_rng(seed)
    for level in range(S.k, d, -1):
        level_faces = [fid for fid in sorted(content)
                       if S.face(fid).dim == level and content[fid]]
        before = sum(simplex_volume(p) for fid in level_faces for p in content[fid])
        after = 0.0
        for fid in level_faces:
            pieces = content.pop(fid)
            face = S.face(fid).poly
            E_f = SimplicialSet(np.array(pieces), d, [{} for _ in pieces])
            choice = optimal_center(face, E_f, n_candidates=n_candidates,
                                    seed=int(rng.integers(2 ** 31)), tol=tol)
            facets = enumerate_subfaces(face).levels[face.dim - 1]
            child_ids = _child_id_lookup(S, fid, facets)
            stages.append(RadialStage(face, choice.center, face_id=fid))
            for fi, img in radial_pushforward(face, choice.center, pieces, tol, facets=facets):
                vol = simplex_volume(img)
                if vol <= tol.geo:
                    continue
                after += vol
                child_fid = child_ids[fi]
                target = _lowest_face(S, _owner_cell(S, child_fid), img)
                # keep within the facet lattice: assign to the facet itself
                # unless the piece sits entirely inside a deeper subface
                if S.face(target).dim > S.face(child_fid).dim:
                    target = child_fid
                content.setdefault(target, []).append(img)
        ledger.append(CascadeRow(level, len(level_faces), before, after))
    leftovers = [p for fid in sorted(content) for p in content[fid]]
    if leftovers:
        image = SimplicialSet(np.array(leftovers), d, [{} for _ in leftovers])
    else:
        image = SimplicialSet.empty(d, S.n)
    return image, PiecewiseMap(stages), ledger


def _owner_cell(S, fid):
    return S.cells_of_face(fid)[0]


# -- erosion -------------------------------------------------------------------


def _edge_param(poly, pts):
    a, b = poly.vertices[0], poly.vertices[1]
    d = b - a
    L = float(np.linalg.norm(d))
    return np.atleast_2d(pts - a) @ (d / L), L


def _interval_union(intervals, L, eps=1e-12):
    ivs = sorted((max(0.0, min(t0, t1)), min(L, max(t0, t1))) for t0, t1 in intervals)
    merged = []
    for t0, t1 in ivs:
        if t1 - t0 <= eps:
            continue
        if merged and t0 <= merged[-1][1] + eps:
            merged[-1] = (merged[-1][0], max(merged[-1][1], t1))
        else:
            merged.append((t0, t1))
    covered = sum(t1 - t0 for t0, t1 in merged)
    gaps = []
    cur = 0.0
    for t0, t1 in merged:
        if t0 - cur > eps:
            gaps.append((cur, t0))
        cur = max(cur, t1)
    if L - cur > eps:
        gaps.append((cur, L))
    return covered, merged, gaps


def _face_union_2d(poly, pieces):
    from shapely.geometry import Polygon
    from shapely.ops import unary_union

    def to2d(pts):
        return poly.hull_coords(pts)

    shapes = []
    for p in pieces:
        tri = Polygon(to2d(p))
        if tri.area > 1e-15:
            shapes.append(tri.buffer(0))
    union = unary_union(shapes) if shapes else Polygon()
    ring = [poly.hull_coords(poly.vertices[i : i + 1])[0] for i in poly.hull_order()]
    face_poly = Polygon(ring)
    inter = face_poly.intersection(union)
    uncovered = face_poly.difference(union)
    return inter.area, face_poly.area, uncovered


def erode(S, E, d=None, tol=DEFAULT_TOL):
    """Iterated radial projection of partially covered faces until the set is
    exactly a union of subfaces; never increases d-measure."""
    from .skeleton import Skeleton

    if isinstance(E, Skeleton):
        # a union of subfaces is already a fixed point: every face is exactly
        # covered, so erosion only canonicalizes the id set
        return _canonical_skeleton(S, set(E.face_ids))
    if d is None:
        d = E.dim
    content = assign_to_faces(S, E, tol)
    retained = set()
    vertex_hits = set()
    for level in range(d, 0, -1):
        face_ids = [fid for fid in sorted(content) if S.face(fid).dim == level]
        for fid in face_ids:
            pieces = content.pop(fid)
            if not pieces:
                continue
            face = S.face(fid).poly
            fm = face.measure()
            if level == 1:
                tvals, L = [], None
                ivs = []
                for p in pieces:
                    ts, L = _edge_param(face, p)
                    ivs.append((float(ts.min()), float(ts.max())))
                covered, merged, gaps = _interval_union(ivs, L)
                if fm - covered < tol.cover * fm:
                    retained.add(fid)
                    continue
                if covered <= tol.geo:
                    continue
                g0, g1 = max(gaps, key=lambda g: g[1] - g[0])
                tc = 0.5 * (g0 + g1)
                a, b = face.vertices[0], face.vertices[1]
                for t0, t1 in merged:
                    if t1 <= tc:
                        vertex_hits.add(S._canon(a))
                    if t0 >= tc:
                        vertex_hits.add(S._canon(b))
            else:
                area, fm2, uncovered = _face_union_2d(face, pieces)
                if fm2 - area < tol.cover * fm2:
                    retained.add(fid)
                    continue
                if area <= tol.geo:
                    continue
                rep = uncovered.representative_point()
                center = face.from_hull_coords(np.array([rep.x, rep.y]))[0]
                facets = enumerate_subfaces(face).levels[level - 1]
                child_ids = _child_id_lookup(S, fid, facets)
                for fi, img in radial_pushforward(face, center, pieces, tol, facets=facets):
                    child = child_ids[fi]
                    seg = _collapse_to_segment(img)
                    if seg is None:
                        continue
                    content.setdefault(child, []).append(seg)
    for key in vertex_hits:
        fid = S._key_to_id.get(frozenset([key]))
        if fid is not None:
            retained.add(fid)
    return _canonical_skeleton(S, retained)


def _collapse_to_segment(img):
    """Degenerate (collinear) simplex image -> maximal segment, or None."""
    pts = np.asarray(img, dtype=float)
    d = pts - pts[0]
    norms = np.linalg.norm(d, axis=1)
    if norms.max() <= 1e-12:
        return None
    axis = d[norms.argmax()] / norms.max()
    t = d @ axis
    lo, hi = float(t.min()), float(t.max())
    if hi - lo <= 1e-12:
        return None
    return np.stack([pts[0] + lo * axis, pts[0] + hi * axis])


def _canonical_skeleton(S, face_ids):
    from .skeleton import Skeleton

    implied = set()
    for fid in face_ids:
        stack = [fid]
        while stack:
            cur = stack.pop()
            for ch in S.children.get(cur, ()):
                if ch not in implied:
                    implied.add(ch)
                    stack.append(ch)
    return Skeleton(frozenset(f for f in face_ids if f not in implied))


# -- patch fitting -------------------------------------------------------------


@dataclass
class PatchFit:
    center: np.ndarray
    plane_basis: np.ndarray
    r: float
    u: float
    rho: float
    leakage: float


def _plane_basis_of(simplex):
    v = np.asarray(simplex, dtype=float)
    E = v[1:] - v[0]
    q, _ = np.linalg.qr(E.T)
    return q.T[: len(E)]


def _refined_pieces(E: SimplicialSet, max_diam):
    out = []
    for s in E.simplices:
        stack = [s]
        while stack:
            cur = stack.pop()
            d = max(np.linalg.norm(cur[i] - cur[j])
                    for i in range(len(cur)) for j in range(i + 1, len(cur)))
            if d <= max_diam:
                out.append(cur)
            else:
                stack.extend(subdivide_longest_edge(cur))
    return out


def fit_patches(E: SimplicialSet, epsilon, max_patches, seed=0, tol=DEFAULT_TOL):
    """Greedy disjoint Vitali-style cover of the set by cone patches.

    Each patch is a ball around a simplex barycenter with the simplex plane as
    its cone plane; radii shrink until the relative content outside the cone
    is at most epsilon. Centers are chosen far from already accepted patches.
    """
    if len(E) == 0:
        return []
    d = E.dim
    rho = min(0.5, epsilon / (2.0 * d))
    u = 0.25
    total = E.measure()
    scale0 = 0.01 * math.sqrt(total) + 1e-12
    pieces = [(p, simplex_volume(p)) for p in _refined_pieces(E, 8 * scale0)]
    patches = []
    covered = 0.0
    attempts = 0
    while covered < (1.0 - epsilon) * total and len(patches) < max_patches:
        attempts += 1
        if attempts > 4 * max_patches or not pieces:
            break
        # prefer content far away from every accepted patch ball
        if patches:
            def clearance(pv):
                b = pv[0].mean(axis=0)
                return min(np.linalg.norm(b - p.center) - p.r * (1 + p.rho)
                           for p in patches)
            pieces.sort(key=lambda pv: (-clearance(pv), -pv[1]))
        else:
            pieces.sort(key=lambda pv: -pv[1])
        s, vol = pieces[0]
        if vol <= tol.geo:
            break
        x = s.mean(axis=0)
        basis = _plane_basis_of(s)
        r_cap = max(np.linalg.norm(E.points() - x, axis=1).max(), 1e-9)
        for p in patches:
            gap = np.linalg.norm(p.center - x) - p.r * (1.0 + p.rho)
            r_cap = min(r_cap, gap / (1.0 + rho))
        accepted = None
        if r_cap > scale0:
            for frac in (1.0, 0.5, 0.25, 0.12, 0.06, 0.03):
                r = r_cap * frac
                if r <= scale0:
                    break
                region = ConeRegion(x, r, u, basis)
                m_ball = m_in = 0.0
                for piece, v in pieces:
                    b = piece.mean(axis=0)
                    if np.linalg.norm(b - x) <= r * (1.0 + rho):
                        m_ball += v
                        if region.contains(b[None, :])[0]:
                            m_in += v
                if m_ball <= tol.geo:
                    continue
                leak = (m_ball - m_in) / m_ball
                if leak <= epsilon:
                    accepted = (r, leak, m_in, region)
                    break
        if accepted is None:
            pieces.pop(0)
            continue
        r, leak, m_in, region = accepted
        patches.append(PatchFit(x, basis, r, u, rho, leak))
        covered += m_in
        pieces = [(p, v) for p, v in pieces
                  if not region.contains(p.mean(axis=0)[None, :])[0]]
    return patches


# -- deformation blending check ------------------------------------------------


@dataclass
class BlendReport:
    passed: bool
    sup_norm: float
    support_margin: float


def blend_check(phi: PiecewiseMap, f: PiecewiseMap, rho, window, n_samples=2048,
                seed=0) -> BlendReport:
    """Certify that the straight-line blend of phi into f is an admissible
    deformation: sup|phi - f| < rho and the moved set stays rho-deep inside."""
    rng = np.random.default_rng(seed)
    lo, hi = window.lo, window.hi
    n = lo.size
    pts = rng.uniform(lo, hi, size=(n_samples, n))
    # include boundary samples so boundary-touching supports are caught
    for ax in range(n):
        for val in (lo[ax], hi[ax]):
            extra = rng.uniform(lo, hi, size=(64, n))
            extra[:, ax] = val
            pts = np.vstack([pts, extra])
    a = phi.apply(pts)
    b = f.apply(pts)
    sup = float(np.linalg.norm(a - b, axis=1).max())
    moved = (np.linalg.norm(a - pts, axis=1) > 1e-12) | (np.linalg.norm(b - pts, axis=1) > 1e-12)
    if moved.any():
        depth = np.minimum((pts[moved] - lo).min(axis=1), (hi - pts[moved]).min(axis=1))
        margin = float(depth.min() - rho)
    else:
        margin = math.inf
    # conservative strict inequality: a gap equal to rho up to roundoff fails
    passed = (sup < rho * (1.0 - 1e-9) - 1e-15) and (margin > 0.0)
    return BlendReport(passed, sup, margin)
