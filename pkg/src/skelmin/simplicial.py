"""Finite unions of d-simplices: the computational stand-in for d-sets.

Inputs to the projection pipeline are restricted to rectifiable simplicial
sets; all measure bookkeeping reduces to simplex volumes.
"""

from dataclasses import dataclass, field

import numpy as np

from .tol import DEFAULT_TOL


def simplex_volume(verts):
    """d-volume of a simplex given as (d+1, n) vertex rows."""
    v = np.asarray(verts, dtype=float)
    d = v.shape[0] - 1
    if d == 0:
        return 0.0
    E = v[1:] - v[0]
    G = E @ E.T
    det = float(np.linalg.det(G))
    if det <= 0.0:
        return 0.0
    fact = 1.0
    for i in range(2, d + 1):
        fact *= i
    return float(np.sqrt(det)) / fact


@dataclass
class SimplicialSet:
    """Soup of d-simplices in R^n with per-simplex metadata."""

    simplices: np.ndarray  # (m, d+1, n)
    dim: int
    meta: list = field(default_factory=list)  # dicts: patch id, generation

    @classmethod
    def from_simplices(cls, simps, dim=None, meta=None):
        arr = np.asarray(simps, dtype=float)
        if arr.size == 0:
            d = dim if dim is not None else 1
            return cls(np.zeros((0, d + 1, 2)), d, [])
        if arr.ndim == 2:
            arr = arr[None, :, :]
        d = arr.shape[1] - 1 if dim is None else dim
        m = meta if meta is not None else [{} for _ in range(arr.shape[0])]
        return cls(arr, d, list(m))

    @classmethod
    def empty(cls, dim, n):
        return cls(np.zeros((0, dim + 1, n)), dim, [])

    def __len__(self):
        return self.simplices.shape[0]

    @property
    def ambient_dim(self):
        return self.simplices.shape[2]

    def volumes(self):
        return np.array([simplex_volume(s) for s in self.simplices])

    def measure(self):
        return float(self.volumes().sum())

    def pruned(self, vol_floor=None):
        """Drop degenerate simplices; returns (set, dropped measure)."""
        floor = DEFAULT_TOL.geo if vol_floor is None else vol_floor
        vols = self.volumes()
        keep = vols > floor
        dropped = float(vols[~keep].sum())
        return SimplicialSet(self.simplices[keep], self.dim,
                             [m for m, k in zip(self.meta, keep) if k]), dropped

    def extend(self, other):
        if len(other) == 0:
            return self
        if len(self) == 0:
            return other
        return SimplicialSet(np.concatenate([self.simplices, other.simplices]),
                             self.dim, self.meta + other.meta)

    def transformed(self, fn):
        """Apply a point map to every vertex (PL image, no subdivision)."""
        if len(self) == 0:
            return self
        m, k, n = self.simplices.shape
        flat = self.simplices.reshape(-1, n)
        out = fn(flat).reshape(m, k, -1)
        return SimplicialSet(out, self.dim, list(self.meta))

    def points(self):
        return self.simplices.reshape(-1, self.ambient_dim)

    def barycenters(self):
        return self.simplices.mean(axis=1)


def subdivide_longest_edge(verts):
    """Split one simplex into two across the midpoint of its longest edge."""
    v = np.asarray(verts, dtype=float)
    k = v.shape[0]
    best, bi, bj = -1.0, 0, 1
    for i in range(k):
        for j in range(i + 1, k):
            d = float(np.linalg.norm(v[i] - v[j]))
            if d > best:
                best, bi, bj = d, i, j
    mid = 0.5 * (v[bi] + v[bj])
    a = v.copy()
    a[bj] = mid
    b = v.copy()
    b[bi] = mid
    return a, b


# -- clipping ----------------------------------------------------------------


def clip_segment(p0, p1, A, b, eps=1e-12):
    """Clip segment [p0, p1] against half-spaces A x <= b; None when empty."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    t0, t1 = 0.0, 1.0
    d = p1 - p0
    for a, bb in zip(A, b):
        den = float(a @ d)
        num = float(bb - a @ p0)
        if abs(den) < 1e-15:
            if num < -eps:
                return None
            continue
        t = num / den
        if den > 0:
            t1 = min(t1, t)
        else:
            t0 = max(t0, t)
        if t0 >= t1 - 1e-14:
            return None
    return p0 + t0 * d, p0 + t1 * d


def clip_polygon(pts, A, b, eps=1e-12):
    """Sutherland-Hodgman clip of a planar convex polygon against A x <= b."""
    poly = [np.asarray(p, dtype=float) for p in pts]
    for a, bb in zip(A, b):
        if not poly:
            return []
        out = []
        vals = [float(a @ p - bb) for p in poly]
        m = len(poly)
        for i in range(m):
            p, q = poly[i], poly[(i + 1) % m]
            vp, vq = vals[i], vals[(i + 1) % m]
            if vp <= eps:
                out.append(p)
            if (vp <= eps) != (vq <= eps) and abs(vq - vp) > 1e-15:
                t = vp / (vp - vq)
                out.append(p + t * (q - p))
        poly = out
    return poly


def _fan_triangulate(poly_pts):
    tris = []
    for i in range(1, len(poly_pts) - 1):
        tris.append(np.stack([poly_pts[0], poly_pts[i], poly_pts[i + 1]]))
    return tris


def clip_simplex_to_halfspaces(verts, A, b, eps=1e-12):
    """Pieces of one simplex inside A x <= b, as a list of simplices."""
    v = np.asarray(verts, dtype=float)
    d = v.shape[0] - 1
    if d == 1:
        seg = clip_segment(v[0], v[1], A, b, eps)
        return [np.stack(seg)] if seg is not None else []
    if d == 2:
        poly = clip_polygon(list(v), A, b, eps)
        if len(poly) < 3:
            return []
        return _fan_triangulate(poly)
    raise ValueError("clipping implemented for d in {1, 2}")


def clip_set_to_cell(E: SimplicialSet, cell_poly, eps=1e-12):
    """Pieces of E inside one full-dimensional cell."""
    A = np.array([h.normal for h in cell_poly.half_spaces])
    b = np.array([h.offset for h in cell_poly.half_spaces])
    out = []
    meta = []
    for s, m in zip(E.simplices, E.meta):
        for piece in clip_simplex_to_halfspaces(s, A, b, eps):
            if simplex_volume(piece) > DEFAULT_TOL.geo:
                out.append(piece)
                meta.append(dict(m))
    if not out:
        return SimplicialSet.empty(E.dim, E.ambient_dim)
    return SimplicialSet(np.array(out), E.dim, meta)


def clip_set_to_box(E: SimplicialSet, lo, hi, eps=1e-12):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.size
    A = np.vstack([np.eye(n), -np.eye(n)])
    b = np.concatenate([hi, -lo])
    out, meta = [], []
    for s, m in zip(E.simplices, E.meta):
        for piece in clip_simplex_to_halfspaces(s, A, b, eps):
            if simplex_volume(piece) > DEFAULT_TOL.geo:
                out.append(piece)
                meta.append(dict(m))
    if not out:
        return SimplicialSet.empty(E.dim, E.ambient_dim)
    return SimplicialSet(np.array(out), E.dim, meta)


# -- complexes <-> sets ------------------------------------------------------


def faces_to_set(complex_, face_ids, d) -> SimplicialSet:
    """Dim-d faces of a complex as an exact simplicial set."""
    simps = []
    for fid in face_ids:
        f = complex_.face(fid)
        if f.dim != d:
            continue
        poly = f.poly
        if d == 1:
            simps.append(poly.vertices[:2])
        elif d == 2:
            order = poly.hull_order()
            pts = [poly.vertices[i] for i in order]
            simps.extend(_fan_triangulate(pts))
        else:
            raise ValueError("faces_to_set supports d in {1, 2}")
    if not simps:
        return SimplicialSet.empty(d, complex_.n)
    return SimplicialSet(np.array(simps), d, [{} for _ in simps])


def sample_faces(complex_, face_ids, spacing):
    """Point samples of a face set at the given spatial resolution."""
    pts = []
    for fid in face_ids:
        f = complex_.face(fid)
        poly = f.poly
        if f.dim == 0:
            pts.append(poly.vertices[0])
        elif f.dim == 1:
            a, bpt = poly.vertices[0], poly.vertices[1]
            m = max(2, int(np.ceil(np.linalg.norm(bpt - a) / spacing)) + 1)
            for t in np.linspace(0.0, 1.0, m):
                pts.append(a + t * (bpt - a))
        else:
            order = poly.hull_order()
            ring = [poly.vertices[i] for i in order]
            for tri in _fan_triangulate(ring):
                pts.extend(sample_triangle(tri, spacing))
    return np.array(pts) if pts else np.zeros((0, complex_.n))


def sample_triangle(tri, spacing):
    a, b, c = np.asarray(tri, dtype=float)
    m = max(1, int(np.ceil(max(np.linalg.norm(b - a), np.linalg.norm(c - a),
                                np.linalg.norm(c - b)) / spacing)))
    out = []
    for i in range(m + 1):
        for j in range(m + 1 - i):
            u, v = i / m, j / m
            out.append(a + u * (b - a) + v * (c - a))
    return out


def sample_set(E: SimplicialSet, spacing):
    pts = []
    for s in E.simplices:
        if E.dim == 1:
            a, b = s
            m = max(2, int(np.ceil(np.linalg.norm(b - a) / spacing)) + 1)
            for t in np.linspace(0.0, 1.0, m):
                pts.append(a + t * (b - a))
        else:
            pts.extend(sample_triangle(s, spacing))
    return np.array(pts) if pts else np.zeros((0, E.ambient_dim))
