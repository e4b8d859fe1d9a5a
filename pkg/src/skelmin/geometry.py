"""Convex polyhedra, face lattices, shape statistics and polyhedral complexes.

Ambient dimension is 2 or 3 throughout; members of a complex all share one
dimension k <= n and are represented both by their vertices and by an
inclusion-minimal family of half-spaces relative to their affine hull.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyRegion, UnboundedRegion
from .linprog import chebyshev_center, solve_lp
from .tol import DEFAULT_TOL, vkey


@dataclass(frozen=True)
class HalfSpace:
    """Points x with dot(normal, x) <= offset; normal is a unit vector."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = np.linalg.norm(n)
        if abs(norm - 1.0) > DEFAULT_TOL.unit:
            if norm <= DEFAULT_TOL.unit:
                raise ValueError("half-space normal must be nonzero")
            object.__setattr__(self, "normal", n / norm)
            object.__setattr__(self, "offset", float(self.offset) / norm)
        else:
            object.__setattr__(self, "normal", n)
            object.__setattr__(self, "offset", float(self.offset))


@dataclass(frozen=True)
class ShapeStats:
    outer_radius: float
    inner_radius: float
    rotondity: float
    inscribed_center: np.ndarray


def _affine_hull(points, tol):
    """Base point and orthonormal row basis of the affine hull of points."""
    pts = np.asarray(points, dtype=float)
    base = pts[0]
    diffs = pts[1:] - base
    if len(diffs) == 0:
        return base, np.zeros((0, pts.shape[1]))
    u, s, vt = np.linalg.svd(diffs, full_matrices=False)
    scale = max(1.0, float(s[0]) if s.size else 1.0)
    rank = int(np.sum(s > tol.geo * scale))
    return base, vt[:rank]


def _dedup_points(points, tol):
    out = []
    seen = set()
    for p in points:
        k = vkey(p, tol)
        if k not in seen:
            seen.add(k)
            out.append(np.asarray(p, dtype=float))
    return np.array(out) if out else np.zeros((0, len(points[0]) if len(points) else 0))


def _monotone_chain(pts2):
    """Indices of the convex hull of 2D points, counter-clockwise order."""
    order = np.lexsort((pts2[:, 1], pts2[:, 0]))

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for idx in order:
        while len(lower) >= 2 and cross(pts2[lower[-2]], pts2[lower[-1]], pts2[idx]) <= 0:
            lower.pop()
        lower.append(int(idx))
    for idx in order[::-1]:
        while len(upper) >= 2 and cross(pts2[upper[-2]], pts2[upper[-1]], pts2[idx]) <= 0:
            upper.pop()
        upper.append(int(idx))
    return lower[:-1] + upper[:-1]


class Polyhedron:
    """Compact convex region of dimension k within its affine hull in R^n."""

    def __init__(self, vertices, half_spaces, base, basis, tol=DEFAULT_TOL):
        self.vertices = np.asarray(vertices, dtype=float)
        self.half_spaces = list(half_spaces)
        self.base = np.asarray(base, dtype=float)
        self.basis = np.asarray(basis, dtype=float).reshape(-1, self.vertices.shape[1])
        self.dim = self.basis.shape[0]
        self.tol = tol
        self._stats = None
        self._volume = None
        self._hull_order = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_vertices(cls, points, tol=DEFAULT_TOL):
        """Convex hull of points; exact for hull dimension <= 2."""
        pts = _dedup_points(np.atleast_2d(np.asarray(points, dtype=float)), tol)
        if len(pts) == 0:
            raise EmptyRegion("no points given")
        base, basis = _affine_hull(pts, tol)
        k = basis.shape[0]
        if k == 0:
            return cls(pts[:1], [], base, basis, tol)
        if k == 1:
            t = (pts - base) @ basis[0]
            lo, hi = float(t.min()), float(t.max())
            verts = np.array([base + lo * basis[0], base + hi * basis[0]])
            hs = [HalfSpace(basis[0], hi + float(basis[0] @ base)),
                  HalfSpace(-basis[0], -lo - float(basis[0] @ base))]
            return cls(verts, hs, base, basis, tol)
        if k == 2:
            y = (pts - base) @ basis.T
            hull = _monotone_chain(y)
            verts = pts[hull]
            y = y[hull]
            hs = []
            m = len(hull)
            centroid = y.mean(axis=0)
            for i in range(m):
                a, b = y[i], y[(i + 1) % m]
                d = b - a
                nor2 = np.array([d[1], -d[0]])
                nor2 /= np.linalg.norm(nor2)
                if nor2 @ (a - centroid) < 0:
                    nor2 = -nor2
                nor = nor2 @ basis
                hs.append(HalfSpace(nor, float(nor @ verts[i])))
            return cls(verts, hs, base, basis, tol)
        raise ValueError("from_vertices supports hull dimension <= 2; "
                         "use a dedicated constructor for 3-dimensional cells")

    @classmethod
    def from_halfspaces(cls, half_spaces, tol=DEFAULT_TOL, check=True):
        """Full-dimensional polyhedron in R^n from its half-space family."""
        verts = vertex_enumeration(half_spaces, tol=tol, check=check)
        n = verts.shape[1]
        base, basis = verts[0], np.eye(n)
        hs = _minimal_family(half_spaces, verts, basis, n, tol)
        return cls(verts, hs, base, basis, tol)

    @classmethod
    def from_box(cls, lo, hi, frame=None, tol=DEFAULT_TOL):
        """Axis box [lo, hi] in frame coordinates (frame = (origin, row basis))."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        n = lo.size
        if frame is None:
            origin, B = np.zeros(n), np.eye(n)
        else:
            origin, B = np.asarray(frame[0], dtype=float), np.asarray(frame[1], dtype=float)
        p = _box_face(origin, B, lo, hi, {}, tol)
        p._box = (origin, B, lo, hi, {})
        return p

    @classmethod
    def from_simplex(cls, points, tol=DEFAULT_TOL):
        """Nondegenerate k-simplex from k+1 points (k = ambient dim for cells)."""
        pts = np.asarray(points, dtype=float)
        k = pts.shape[0] - 1
        if k <= 2:
            return cls.from_vertices(pts, tol)
        if k != 3 or pts.shape[1] != 3:
            raise ValueError("from_simplex supports up to tetrahedra")
        hs = []
        for i in range(4):
            tri = np.delete(pts, i, axis=0)
            nor = np.cross(tri[1] - tri[0], tri[2] - tri[0])
            norm = np.linalg.norm(nor)
            if norm <= tol.geo:
                raise ValueError("degenerate tetrahedron")
            nor = nor / norm
            if nor @ (pts[i] - tri[0]) > 0:
                nor = -nor
            hs.append(HalfSpace(nor, float(nor @ tri[0])))
        return cls(pts, hs, pts[0], np.eye(3), tol)

    @classmethod
    def from_pyramid(cls, base_quad, apex, tol=DEFAULT_TOL):
        """Pyramid over a planar convex quad (vertices in cyclic order)."""
        q = np.asarray(base_quad, dtype=float)
        a = np.asarray(apex, dtype=float)
        inner = (q.mean(axis=0) + a) / 2.0
        hs = []
        nor = np.cross(q[1] - q[0], q[2] - q[0])
        nor /= np.linalg.norm(nor)
        if nor @ (a - q[0]) > 0:
            nor = -nor
        hs.append(HalfSpace(nor, float(nor @ q[0])))
        for i in range(4):
            p0, p1 = q[i], q[(i + 1) % 4]
            nor = np.cross(p1 - p0, a - p0)
            nor /= np.linalg.norm(nor)
            if nor @ (inner - p0) > 0:
                nor = -nor
            hs.append(HalfSpace(nor, float(nor @ p0)))
        verts = np.vstack([q, a[None, :]])
        return cls(verts, hs, q[0], np.eye(3), tol)

    # -- queries -----------------------------------------------------------

    @property
    def ambient_dim(self):
        return self.vertices.shape[1]

    def hull_coords(self, points):
        return (np.atleast_2d(points) - self.base) @ self.basis.T

    def from_hull_coords(self, y):
        return self.base + np.atleast_2d(y) @ self.basis

    def hull_halfspaces(self):
        """(A, b) rows of the half-space family expressed in hull coordinates."""
        if not self.half_spaces:
            return np.zeros((0, self.dim)), np.zeros(0)
        A = np.array([self.basis @ h.normal for h in self.half_spaces])
        b = np.array([h.offset - h.normal @ self.base for h in self.half_spaces])
        norms = np.linalg.norm(A, axis=1)
        return A / norms[:, None], b / norms

    def dist_to_hull(self, points):
        pts = np.atleast_2d(points)
        rel = pts - self.base
        proj = rel @ self.basis.T @ self.basis
        return np.linalg.norm(rel - proj, axis=1)

    def contains(self, point, margin=None):
        margin = self.tol.geo if margin is None else margin
        p = np.asarray(point, dtype=float)
        if self.dist_to_hull(p)[0] > margin:
            return False
        for h in self.half_spaces:
            if h.normal @ p > h.offset + margin:
                return False
        return True

    def rel_interior_contains(self, point, margin=None):
        margin = self.tol.geo if margin is None else margin
        p = np.asarray(point, dtype=float)
        if self.dim == 0:
            return bool(np.linalg.norm(p - self.vertices[0]) <= margin)
        if self.dist_to_hull(p)[0] > margin:
            return False
        for h in self.half_spaces:
            if h.normal @ p > h.offset - margin:
                return False
        return True

    def interior_point(self):
        return self.vertices.mean(axis=0)

    def diameter(self):
        v = self.vertices
        d2 = ((v[:, None, :] - v[None, :, :]) ** 2).sum(axis=2)
        return float(np.sqrt(d2.max()))

    def hull_order(self):
        """Vertex indices in counter-clockwise hull-coordinate order (dim 2)."""
        if self.dim != 2:
            raise ValueError("hull_order defined for 2-dimensional polyhedra")
        if self._hull_order is None:
            y = self.hull_coords(self.vertices)
            self._hull_order = _monotone_chain(y)
        return self._hull_order

    def measure(self):
        """k-dimensional volume; H^0 of a vertex is 1 by convention."""
        if self._volume is None:
            if self.dim == 0:
                self._volume = 1.0
            elif self.dim == 1:
                self._volume = float(np.linalg.norm(self.vertices[1] - self.vertices[0]))
            elif self.dim == 2:
                y = self.hull_coords(self.vertices)[self.hull_order()]
                x, z = y[:, 0], y[:, 1]
                self._volume = 0.5 * abs(float(np.dot(x, np.roll(z, -1)) - np.dot(z, np.roll(x, -1))))
            else:
                lat = enumerate_subfaces(self)
                c = self.interior_point()
                vol = 0.0
                for f in lat.levels[2]:
                    fv = f.vertices[f.hull_order()]
                    for i in range(1, len(fv) - 1):
                        vol += abs(float(np.linalg.det(np.stack([fv[0] - c, fv[i] - c, fv[i + 1] - c])))) / 6.0
                self._volume = vol
        return self._volume

    def shape_stats(self):
        if self._stats is None:
            self._stats = shape_stats(self)
        return self._stats

    def transformed(self, rot=None, shift=None, scale=1.0):
        """Similarity image of the polyhedron (rotation, translation, scaling)."""
        n = self.ambient_dim
        rot = np.eye(n) if rot is None else np.asarray(rot, dtype=float)
        shift = np.zeros(n) if shift is None else np.asarray(shift, dtype=float)
        verts = scale * self.vertices @ rot.T + shift
        hs = []
        for h in self.half_spaces:
            nor = rot @ h.normal
            hs.append(HalfSpace(nor, scale * h.offset + float(nor @ shift)))
        base = scale * rot @ self.base + shift
        basis = self.basis @ rot.T
        return Polyhedron(verts, hs, base, basis, self.tol)

    def vkeys(self, tol=None):
        tol = tol or self.tol
        return frozenset(vkey(v, tol) for v in self.vertices)

    def __repr__(self):
        return f"Polyhedron(dim={self.dim}, n={self.ambient_dim}, verts={len(self.vertices)})"


def _minimal_family(half_spaces, verts, basis, k, tol):
    """Keep half-spaces whose boundary meets the region in dimension k-1."""
    kept = []
    for h in half_spaces:
        on = verts[np.abs(verts @ h.normal - h.offset) <= 100 * tol.geo * max(1.0, abs(h.offset))]
        if len(on) == 0:
            continue
        _, fb = _affine_hull(on, tol)
        if fb.shape[0] >= k - 1:
            kept.append(h)
    return kept


def vertex_enumeration(half_spaces, tol=DEFAULT_TOL, check=True):
    """Extreme points of a bounded full-dimensional half-space intersection.

    Uses direct combinatorial search over n-subsets of constraints, which is
    exact and fast at ambient dimension <= 3.
    """
    hs = list(half_spaces)
    if not hs:
        raise UnboundedRegion("no constraints")
    n = hs[0].normal.size
    A = np.array([h.normal for h in hs])
    b = np.array([h.offset for h in hs])
    if check:
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            for sign in (1.0, -1.0):
                res = solve_lp(sign * e, A_ub=A, b_ub=b, maximize=True)
                if res.status == "infeasible":
                    raise EmptyRegion("half-space intersection is empty")
                if res.status == "unbounded":
                    raise UnboundedRegion("half-space intersection is unbounded")
    from itertools import combinations

    pts = []
    for idx in combinations(range(len(hs)), n):
        M = A[list(idx)]
        if abs(np.linalg.det(M)) <= tol.geo:
            continue
        x = np.linalg.solve(M, b[list(idx)])
        if np.all(A @ x <= b + 1e2 * tol.geo * np.maximum(1.0, np.abs(b))):
            pts.append(x)
    if not pts:
        raise EmptyRegion("half-space intersection has no vertices")
    return _dedup_points(pts, tol)


@dataclass
class FaceLattice:
    """Subfaces of one polyhedron, grouped by dimension with incidence links."""

    levels: list  # levels[j] = list of Polyhedron of dimension j
    children: dict  # (dim, idx) -> list of (dim-1, idx)
    parents: dict

    def all_faces(self):
        for lev in self.levels:
            yield from lev


def _box_face(origin, B, lo, hi, fixed, tol):
    """Subface of a frame box with some axes pinned to their lo/hi value."""
    n = lo.size
    free = [i for i in range(n) if i not in fixed]
    coords = []
    for i in range(n):
        coords.append((fixed[i],) if i in fixed else (lo[i], hi[i]))
    corners = np.array(np.meshgrid(*coords, indexing="ij")).reshape(n, -1).T
    verts = origin + corners @ B
    hs = []
    for i in free:
        hs.append(HalfSpace(B[i], float(hi[i] + B[i] @ origin)))
        hs.append(HalfSpace(-B[i], float(-lo[i] - B[i] @ origin)))
    base = verts[0]
    basis = B[free] if free else np.zeros((0, n))
    p = Polyhedron(verts, hs, base, basis, tol)
    if len(free) == 2:
        # corners come in gray-code-free order 00,01,10,11 -> cycle 0,1,3,2
        p._hull_order = [0, 1, 3, 2]
    return p


def _box_lattice(p: Polyhedron) -> FaceLattice:
    origin, B, lo, hi, fixed0 = p._box
    n = lo.size
    free0 = [i for i in range(n) if i not in fixed0]
    k = len(free0)
    levels = [[] for _ in range(k + 1)]
    ids = {}
    from itertools import combinations, product

    for pinned in range(0, k + 1):
        for axes in combinations(free0, pinned):
            for vals in product(*[(lo[a], hi[a]) for a in axes]):
                fixed = dict(fixed0)
                fixed.update(zip(axes, vals))
                if pinned == 0:
                    face = p
                else:
                    face = _box_face(origin, B, lo, hi, fixed, p.tol)
                    face._box = (origin, B, lo, hi, fixed)
                j = k - pinned
                key = frozenset(fixed.items())
                ids[key] = (j, len(levels[j]))
                levels[j].append(face)
    children, parents = {}, {}
    for key, cid in ids.items():
        for key2, pid in ids.items():
            if pid[0] == cid[0] + 1 and key2 < key:
                children.setdefault(pid, []).append(cid)
                parents.setdefault(cid, []).append(pid)
    return FaceLattice(levels, children, parents)


def enumerate_subfaces(p: Polyhedron, tol=None) -> FaceLattice:
    """All subfaces obtained by turning subsets of half-spaces into equalities."""
    tol = tol or p.tol
    if getattr(p, "_box", None) is not None:
        return _box_lattice(p)
    k = p.dim
    levels = [[] for _ in range(k + 1)]
    keys = {}
    if k == 0:
        levels[0].append(p)
        return FaceLattice(levels, {}, {})

    A, b = p.hull_halfspaces()
    Y = p.hull_coords(p.vertices)
    scale = max(1.0, float(np.abs(Y).max()))
    active = [frozenset(np.nonzero(np.abs(A @ y - b) <= 1e3 * tol.geo * scale)[0].tolist())
              for y in Y]

    from itertools import combinations

    m = len(p.half_spaces)
    seen = {}
    face_sets = []
    for size in range(0, m + 1):
        for subset in combinations(range(m), size):
            sel = frozenset(subset)
            vidx = frozenset(i for i, a in enumerate(active) if sel <= a)
            if not vidx or vidx in seen:
                continue
            seen[vidx] = True
            face_sets.append(vidx)

    for vidx in face_sets:
        verts = p.vertices[sorted(vidx)]
        if len(vidx) == len(p.vertices):
            face = p
        else:
            face = Polyhedron.from_vertices(verts, tol)
        levels[face.dim].append((vidx, face))

    children, parents = {}, {}
    out_levels = [[] for _ in range(k + 1)]
    ids = {}
    for j in range(k + 1):
        for vidx, face in levels[j]:
            ids[vidx] = (j, len(out_levels[j]))
            out_levels[j].append(face)
    for vidx_child, cid in ids.items():
        jc = cid[0]
        for vidx_par, pid in ids.items():
            if pid[0] == jc + 1 and vidx_child < vidx_par:
                children.setdefault(pid, []).append(cid)
                parents.setdefault(cid, []).append(pid)
    return FaceLattice(out_levels, children, parents)


# -- shape statistics -----------------------------------------------------


def _circumball(support):
    """Smallest ball with all support points on its boundary; the center is
    constrained to the affine hull of the support set."""
    pts = np.asarray(support, dtype=float)
    if len(pts) == 0:
        return None, 0.0
    if len(pts) == 1:
        return pts[0], 0.0
    p0 = pts[0]
    D = pts[1:] - p0
    G = D @ D.T
    rhs = 0.5 * np.diag(G)
    t, *_ = np.linalg.lstsq(G, rhs, rcond=None)
    c = p0 + t @ D
    r = float(np.linalg.norm(pts - c, axis=1).max())
    return c, r


def _welzl(points, rng):
    pts = [np.asarray(p, dtype=float) for p in points]
    rng.shuffle(pts)

    def mb(idx_end, support):
        if idx_end == 0 or len(support) == len(pts[0]) + 1:
            return _circumball(support)
        c, r = mb(idx_end - 1, support)
        p = pts[idx_end - 1]
        if c is not None and np.linalg.norm(p - c) <= r * (1 + 1e-12) + 1e-14:
            return c, r
        return mb(idx_end - 1, support + [p])

    import sys

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * len(pts) + 100))
    try:
        return mb(len(pts), [])
    finally:
        sys.setrecursionlimit(old)


def min_enclosing_ball(points):
    """Exact smallest enclosing ball (Welzl recursion, deterministic shuffle)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 1:
        return pts[0], 0.0
    rng = np.random.default_rng(20240901)
    c, r = _welzl(list(pts), rng)
    return c, float(r)


def shape_stats(p: Polyhedron) -> ShapeStats:
    """Outer/inner radii and rotondity of a polyhedron (Def-style conventions)."""
    if p.dim == 0:
        return ShapeStats(0.0, 0.0, 1.0, p.vertices[0].copy())
    Y = p.hull_coords(p.vertices)
    _, outer = min_enclosing_ball(Y)
    if len(p.vertices) == p.dim + 1:
        # simplex: closed-form inradius dim * volume / boundary content
        inner, center = _simplex_inball(p)
    else:
        A, b = p.hull_halfspaces()
        center_h, inner = chebyshev_center(A, b)
        inner = max(0.0, float(inner))
        center = p.from_hull_coords(center_h)[0]
    rot = 1.0 if outer <= 0.0 else min(1.0, inner / outer)
    return ShapeStats(float(outer), inner, float(rot), center)


def _simplex_inball(p: Polyhedron):
    v = p.vertices
    k = p.dim
    if k == 1:
        return 0.5 * float(np.linalg.norm(v[1] - v[0])), 0.5 * (v[0] + v[1])
    if k == 2:
        a = float(np.linalg.norm(v[1] - v[2]))
        b = float(np.linalg.norm(v[0] - v[2]))
        c = float(np.linalg.norm(v[0] - v[1]))
        per = a + b + c
        center = (a * v[0] + b * v[1] + c * v[2]) / per
        E = v[1:] - v[0]
        area = 0.5 * float(np.sqrt(max(np.linalg.det(E @ E.T), 0.0)))
        return 2.0 * area / per, center
    # tetrahedron: r = 3V / total face area, incenter = area-weighted vertices
    areas = []
    for i in range(4):
        tri = np.delete(v, i, axis=0)
        areas.append(0.5 * float(np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0]))))
    vol = abs(float(np.linalg.det(np.stack([v[1] - v[0], v[2] - v[0], v[3] - v[0]])))) / 6.0
    total = sum(areas)
    center = sum(a * v[i] for i, a in enumerate(areas)) / total
    return 3.0 * vol / total, center


# -- complexes ------------------------------------------------------------


@dataclass
class Subface:
    id: int
    poly: Polyhedron
    dim: int
    vkeys: frozenset
    owners: list = field(default_factory=list)  # member-cell subface ids


@dataclass
class ValidationReport:
    ok: bool
    violations: list  # pairs of subface ids whose relative interiors meet


class Complex:
    """Finite set of equal-dimension polyhedra with a shared, deduplicated
    subface store. Vertex identity (and, on a torus, face identification) is
    decided by quantized canonical coordinates."""

    def __init__(self, polyhedra, tol=DEFAULT_TOL, periodic=None, grid_spec=None):
        polys = list(polyhedra)
        if not polys:
            raise EmptyRegion("a complex needs at least one polyhedron")
        k = polys[0].dim
        if any(q.dim != k for q in polys):
            raise ValueError("all member polyhedra must share one dimension")
        self.n = polys[0].ambient_dim
        self.k = k
        self.tol = tol
        self.periodic = periodic
        self.grid_spec = grid_spec
        self.faces: list[Subface] = []
        self.cells: list[int] = []
        self.cell_faces: dict[int, list] = {}
        self._key_to_id = {}
        self.children: dict[int, set] = {}
        self.parents: dict[int, set] = {}
        self._by_dim = None
        self._stats = None
        for poly in polys:
            self._add_cell(poly)

    def _canon(self, coords):
        if self.periodic is None:
            return vkey(coords, self.tol)
        return vkey(self.periodic.wrap(coords), self.tol)

    def _face_key(self, poly):
        return frozenset(self._canon(v) for v in poly.vertices)

    def _intern(self, poly):
        key = self._face_key(poly)
        fid = self._key_to_id.get(key)
        if fid is None:
            fid = len(self.faces)
            self.faces.append(Subface(fid, poly, poly.dim, key))
            self._key_to_id[key] = fid
            self.children[fid] = set()
            self.parents[fid] = set()
        return fid

    def _add_cell(self, poly):
        lat = enumerate_subfaces(poly, self.tol)
        local_ids = {}
        for j, level in enumerate(lat.levels):
            for idx, face in enumerate(level):
                local_ids[(j, idx)] = self._intern(face)
        cell_id = local_ids[(self.k, 0)]
        self.cells.append(cell_id)
        self.cell_faces[cell_id] = sorted(set(local_ids.values()))
        for cid_local, gid in local_ids.items():
            self.faces[gid].owners.append(cell_id)
        for par, childs in lat.children.items():
            for ch in childs:
                self.children[local_ids[par]].add(local_ids[ch])
                self.parents[local_ids[ch]].add(local_ids[par])

    # -- queries ---------------------------------------------------------

    def faces_of_dim(self, j):
        if self._by_dim is None:
            self._by_dim = {}
            for f in self.faces:
                self._by_dim.setdefault(f.dim, []).append(f.id)
        return list(self._by_dim.get(j, []))

    def face(self, fid) -> Subface:
        return self.faces[fid]

    def face_measure(self, fid):
        return self.faces[fid].poly.measure()

    def cells_of_face(self, fid):
        """Member cells whose closure contains the subface."""
        return sorted(set(self.faces[fid].owners))

    def face_vertices(self, fid):
        return self.faces[fid].poly.vertices

    def boundary_faces(self):
        """Faces of dimension k-1 lying in exactly one member polyhedron."""
        out = []
        for fid in self.faces_of_dim(self.k - 1):
            if len(self.cells_of_face(fid)) == 1:
                out.append(fid)
        return out

    def aggregate_stats(self):
        """(outer max, inner min, rotondity min) over every subface."""
        if self._stats is None:
            self._stats = self.recompute_stats()
        return self._stats

    def recompute_stats(self):
        outer = 0.0
        inner = np.inf
        rot = 1.0
        for f in self.faces:
            s = f.poly.shape_stats()
            outer = max(outer, s.outer_radius)
            if f.dim > 0:
                inner = min(inner, s.inner_radius)
            rot = min(rot, s.rotondity)
        return ShapeStats(outer, float(inner), rot, np.zeros(self.n))

    def locate_cells(self, point):
        """Member cells containing the point (closed containment)."""
        out = []
        for cid in self.cells:
            if self.faces[cid].poly.contains(point):
                out.append(cid)
        return out


def _quick_relint_disjoint(pa: Polyhedron, pb: Polyhedron, tol) -> bool:
    """Cheap certificates that the relative interiors cannot meet.

    Either a defining half-space of one polyhedron contains the other in its
    closed complement, or the other lies strictly on one side of a hull
    hyperplane. Grid-adjacent faces are all rejected here, keeping the LP for
    genuinely ambiguous pairs."""
    eps = 1e3 * tol.geo
    for p, q in ((pa, pb), (pb, pa)):
        for h in p.half_spaces:
            vals = q.vertices @ h.normal
            if vals.min() >= h.offset - eps:
                return True
        if p.dim < p.ambient_dim:
            rel = q.vertices - p.base
            perp = rel - rel @ p.basis.T @ p.basis
            norms = np.linalg.norm(perp, axis=1)
            if norms.min() > eps:
                # all of q strictly on one side of p's affine hull: the hull
                # of the perpendicular components misses the origin
                u = perp[0] / norms[0]
                if (perp @ u).min() > eps:
                    return True
    return False


def _relints_intersect(pa: Polyhedron, pb: Polyhedron, tol) -> bool:
    """LP test: is some point in both relative interiors?"""
    if _quick_relint_disjoint(pa, pb, tol):
        return False
    Va, Vb = pa.vertices, pb.vertices
    na, nb = len(Va), len(Vb)
    n = Va.shape[1]
    nv = na + nb + 1  # weights for both plus t
    c = np.zeros(nv)
    c[-1] = 1.0
    A_eq = np.zeros((n + 2, nv))
    b_eq = np.zeros(n + 2)
    A_eq[:n, :na] = Va.T
    A_eq[:n, na : na + nb] = -Vb.T
    A_eq[n, :na] = 1.0
    b_eq[n] = 1.0
    A_eq[n + 1, na : na + nb] = 1.0
    b_eq[n + 1] = 1.0
    rows = []
    for i in range(na + nb):
        r = np.zeros(nv)
        r[i] = -1.0
        r[-1] = 1.0
        rows.append(r)
    res = solve_lp(c, A_ub=rows, b_ub=np.zeros(na + nb), A_eq=A_eq, b_eq=b_eq, maximize=True)
    if res.status != "optimal":
        return False
    return res.value > 1e3 * tol.geo


def validate_complex(S: Complex) -> ValidationReport:
    """Check pairwise disjointness of relative interiors of all subfaces."""
    tol = S.tol
    boxes = np.array([[f.poly.vertices.min(axis=0), f.poly.vertices.max(axis=0)]
                      for f in S.faces])
    lo, hi = boxes[:, 0, :], boxes[:, 1, :]
    violations = []
    nf = len(S.faces)
    pad = 10 * tol.geo
    owner_sets = [set(f.owners) for f in S.faces]
    for i in range(nf):
        overlap = np.all((lo[i] <= hi + pad) & (hi[i] >= lo - pad), axis=1)
        for j in np.nonzero(overlap)[0]:
            if j <= i:
                continue
            fi, fj = S.faces[i], S.faces[int(j)]
            if owner_sets[i] & owner_sets[int(j)]:
                # subfaces of one member polyhedron: lattice-disjoint
                continue
            if fi.vkeys <= fj.vkeys or fj.vkeys <= fi.vkeys:
                # a face and its own subface never share relative interior
                if fi.vkeys != fj.vkeys:
                    shared = fi if len(fi.vkeys) < len(fj.vkeys) else fj
                    other = fj if shared is fi else fi
                    if shared.vkeys <= other.vkeys and _face_of(shared, other, tol):
                        continue
            if _relints_intersect(fi.poly, fj.poly, tol):
                violations.append((i, int(j)))
    return ValidationReport(not violations, violations)


def _face_of(sub: Subface, sup: Subface, tol) -> bool:
    """True when sub's polyhedron lies in the boundary of sup's polyhedron."""
    A, b = sup.poly.hull_halfspaces()
    if len(A) == 0:
        return False
    Y = sup.poly.hull_coords(sub.poly.vertices)
    if np.any(sup.poly.dist_to_hull(sub.poly.vertices) > 10 * tol.geo):
        return False
    vals = A @ Y.T - b[:, None]
    return bool(np.any(np.all(np.abs(vals) <= 1e3 * tol.geo, axis=1)))
