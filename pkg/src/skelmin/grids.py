"""Dyadic grids, obstacle carving, rotated-patch merging and periodic grids.

The merge is a constructive gap fill (Delaunay in the gap, conforming to both
rings) whose required conclusions -- complex validity, a rotondity floor and
preservation of the outer boundary -- are certified on every run rather than
proven in advance.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay

from .errors import ClearanceUnsatisfiable, EmptyRegion, MergeDegenerate, PeriodMismatch
from .geometry import Complex, Polyhedron, validate_complex
from .tol import DEFAULT_TOL, vkey

log = logging.getLogger(__name__)


def rotation2d(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]])


def _cross2(u, v):
    return u[0] * v[1] - u[1] * v[0]


@dataclass(frozen=True)
class DyadicGridSpec:
    stride: float
    origin: np.ndarray
    basis: np.ndarray  # orthonormal rows
    index_set: frozenset  # integer lattice coordinates

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        object.__setattr__(self, "basis", np.asarray(self.basis, dtype=float))
        object.__setattr__(self, "index_set", frozenset(tuple(int(c) for c in z) for z in self.index_set))
        if self.stride <= 0:
            raise ValueError("stride must be positive")
        B = self.basis
        if np.abs(B @ B.T - np.eye(B.shape[0])).max() > DEFAULT_TOL.unit * 10:
            raise ValueError("frame basis must be orthonormal")

    @property
    def n(self):
        return self.basis.shape[0]

    def cell_box(self, z):
        lo = self.stride * np.asarray(z, dtype=float)
        return lo, lo + self.stride

    def to_frame(self, pts):
        return (np.atleast_2d(pts) - self.origin) @ self.basis.T

    def to_ambient(self, y):
        return self.origin + np.atleast_2d(y) @ self.basis

    def cell_index(self, point):
        y = self.to_frame(point)[0] / self.stride
        return tuple(int(np.floor(c + 1e-12)) for c in y)


@dataclass
class MergeReport:
    gap_cell_count: int
    measured_min_rotondity: float
    measured_max_outer_radius: float
    validity: bool


@dataclass(frozen=True)
class PeriodicTopology:
    periods: np.ndarray  # per-axis period lengths, axis-aligned frames only
    origin: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "periods", np.asarray(self.periods, dtype=float))
        o = np.zeros_like(self.periods) if self.origin is None else np.asarray(self.origin, dtype=float)
        object.__setattr__(self, "origin", o)

    def wrap(self, coords):
        c = np.asarray(coords, dtype=float) - self.origin
        w = np.mod(c, self.periods)
        # snap near-period values back to zero so quantized keys identify
        w[w > self.periods - DEFAULT_TOL.quant / 2] = 0.0
        return w + self.origin

    def min_image(self, delta):
        d = np.asarray(delta, dtype=float).copy()
        for i, p in enumerate(self.periods):
            d[i] -= p * np.round(d[i] / p)
        return d


def build_dyadic(spec: DyadicGridSpec, tol=DEFAULT_TOL) -> Complex:
    """One cube per lattice index, in the spec's frame."""
    if not spec.index_set:
        raise EmptyRegion("index set is empty")
    frame = (spec.origin, spec.basis)
    cells = []
    for z in sorted(spec.index_set):
        lo, hi = spec.cell_box(z)
        cells.append(Polyhedron.from_box(lo, hi, frame=frame, tol=tol))
    return Complex(cells, tol=tol, grid_spec=spec)


def build_periodic(spec: DyadicGridSpec, topology: PeriodicTopology, tol=DEFAULT_TOL) -> Complex:
    """Dyadic torus grid: opposite boundary subfaces are identified."""
    if np.abs(spec.basis - np.eye(spec.n)).max() > 10 * tol.unit:
        raise PeriodMismatch("periodic grids require an axis-aligned frame")
    ratios = topology.periods / spec.stride
    if np.any(np.abs(ratios - np.round(ratios)) > 1e-9):
        raise PeriodMismatch(f"periods {topology.periods} not multiples of stride {spec.stride}")
    if not spec.index_set:
        raise EmptyRegion("index set is empty")
    frame = (spec.origin, spec.basis)
    cells = []
    for z in sorted(spec.index_set):
        lo, hi = spec.cell_box(z)
        cells.append(Polyhedron.from_box(lo, hi, frame=frame, tol=tol))
    topo = PeriodicTopology(topology.periods, spec.origin)
    return Complex(cells, tol=tol, periodic=topo, grid_spec=spec)


# -- obstacles and carving --------------------------------------------------


@dataclass(frozen=True)
class ObstacleBall:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))


@dataclass(frozen=True)
class ObstacleBox:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))


def _clamp_to_cell(point, spec, z):
    lo, hi = spec.cell_box(z)
    y = spec.to_frame(point)[0]
    return spec.to_ambient(np.clip(y, lo, hi))[0]


def _cell_obstacle_gap(spec, z, obstacle, tol):
    """(distance, interior_overlap) between one grid cell and an obstacle."""
    if isinstance(obstacle, ObstacleBall):
        proj = _clamp_to_cell(obstacle.center, spec, z)
        d = float(np.linalg.norm(proj - obstacle.center))
        return max(0.0, d - obstacle.radius), d < obstacle.radius - tol.geo
    if isinstance(obstacle, ObstacleBox):
        axis_aligned = np.abs(spec.basis - np.eye(spec.n)).max() <= 10 * tol.unit
        if axis_aligned:
            lo, hi = spec.cell_box(z)
            clo = spec.origin + lo
            chi = spec.origin + hi
            gaps = np.maximum(obstacle.lo - chi, clo - obstacle.hi)
            d = float(np.linalg.norm(np.maximum(gaps, 0.0)))
            overlap = bool(np.all(np.minimum(chi, obstacle.hi) - np.maximum(clo, obstacle.lo) > tol.geo))
            return d, overlap
        # alternating projections between the two convex boxes
        x = spec.to_ambient((np.asarray(z, dtype=float) + 0.5) * spec.stride)[0]
        for _ in range(200):
            y = np.clip(x, obstacle.lo, obstacle.hi)
            x2 = _clamp_to_cell(y, spec, z)
            if np.linalg.norm(x2 - x) < 1e-12:
                x = x2
                break
            x = x2
        y = np.clip(x, obstacle.lo, obstacle.hi)
        d = float(np.linalg.norm(x - y))
        return d, d <= tol.geo and _box_interior_overlap(spec, z, obstacle, tol)
    raise TypeError(f"unsupported obstacle {type(obstacle).__name__}")


def _box_interior_overlap(spec, z, obstacle, tol):
    from .geometry import _relints_intersect

    lo, hi = spec.cell_box(z)
    cell = Polyhedron.from_box(lo, hi, frame=(spec.origin, spec.basis), tol=tol)
    obs = Polyhedron.from_box(obstacle.lo, obstacle.hi, tol=tol)
    return _relints_intersect(cell, obs, tol)


def carve_region(background: Complex, obstacles, clearance, tol=DEFAULT_TOL) -> Complex:
    """Sub-complex of cells at distance >= clearance from every obstacle.

    A cell overlapping an obstacle's interior is always removed; with
    clearance 0, cells merely touching an obstacle's boundary are kept.
    """
    spec = background.grid_spec
    if spec is None:
        raise ValueError("carve_region needs a dyadic background (grid_spec missing)")
    if not obstacles:
        return background
    kept = []
    for z in sorted(spec.index_set):
        ok = True
        for obs in obstacles:
            d, overlap = _cell_obstacle_gap(spec, z, obs, tol)
            if overlap or d < clearance - tol.geo:
                ok = False
                break
        if ok:
            kept.append(z)
    if not kept:
        raise ClearanceUnsatisfiable("no cells survive the clearance filter")
    if not _lattice_connected(kept):
        raise ClearanceUnsatisfiable("carving disconnects the background grid")
    sub = DyadicGridSpec(spec.stride, spec.origin, spec.basis, frozenset(kept))
    return build_dyadic(sub, tol=tol)


def _lattice_connected(cells):
    cells = set(cells)
    if not cells:
        return False
    n = len(next(iter(cells)))
    start = next(iter(cells))
    seen = {start}
    stack = [start]
    while stack:
        c = stack.pop()
        for ax in range(n):
            for dlt in (-1, 1):
                nb = tuple(c[i] + (dlt if i == ax else 0) for i in range(n))
                if nb in cells and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
    return len(seen) == len(cells)


# -- merging ----------------------------------------------------------------


def _hole_components(spec: DyadicGridSpec):
    """Bounded components of the lattice complement of the index set."""
    idx = np.array(sorted(spec.index_set))
    lo = idx.min(axis=0)
    hi = idx.max(axis=0)
    n = spec.n
    inside = spec.index_set
    complement = set()
    rng = [range(int(lo[i]), int(hi[i]) + 1) for i in range(n)]
    from itertools import product

    for z in product(*rng):
        if z not in inside:
            complement.add(z)
    # flood from the bbox shell: those components are outside, not holes
    outside = set()
    stack = [z for z in complement
             if any(z[i] == lo[i] or z[i] == hi[i] for i in range(n))]
    outside.update(stack)
    while stack:
        c = stack.pop()
        for ax in range(n):
            for dlt in (-1, 1):
                nb = tuple(c[i] + (dlt if i == ax else 0) for i in range(n))
                if nb in complement and nb not in outside:
                    outside.add(nb)
                    stack.append(nb)
    remaining = complement - outside
    holes = []
    while remaining:
        start = remaining.pop()
        comp = {start}
        stack = [start]
        while stack:
            c = stack.pop()
            for ax in range(n):
                for dlt in (-1, 1):
                    nb = tuple(c[i] + (dlt if i == ax else 0) for i in range(n))
                    if nb in remaining:
                        remaining.remove(nb)
                        comp.add(nb)
                        stack.append(nb)
        holes.append(comp)
    return holes


def _ring_faces(spec, hole, axis_pairs=False):
    """Grid faces separating hole cells from grid cells, as vertex tuples."""
    faces = []
    n = spec.n
    s = spec.stride
    for z in sorted(hole):
        for ax in range(n):
            for dlt in (-1, 1):
                nb = tuple(z[i] + (dlt if i == ax else 0) for i in range(n))
                if nb in spec.index_set:
                    # shared face at coordinate plane of the neighbor side
                    base = np.array(z, dtype=float)
                    if dlt == 1:
                        base[ax] += 1.0
                    fixed = base[ax] * s
                    free = [i for i in range(n) if i != ax]
                    corners = []
                    from itertools import product as _p

                    for combo in _p(*[(0.0, 1.0)] * (n - 1)):
                        y = np.zeros(n)
                        y[ax] = fixed
                        for i, c in zip(free, combo):
                            y[i] = (base[i] + c) * s
                        corners.append(spec.to_ambient(y)[0])
                    if n == 2:
                        faces.append((corners[0], corners[1], tuple(z), ax, dlt))
                    else:
                        quad = [corners[0], corners[1], corners[3], corners[2]]
                        faces.append((quad, tuple(z), ax, dlt))
    return faces


def _tri_rotondity(a, b, c):
    la = np.linalg.norm(b - c)
    lb = np.linalg.norm(a - c)
    lc = np.linalg.norm(a - b)
    s = 0.5 * (la + lb + lc)
    area2 = max(s * (s - la) * (s - lb) * (s - lc), 0.0)
    if s <= 0:
        return 0.0
    area = np.sqrt(area2)
    if area <= 0:
        return 0.0
    r_in = area / s
    r_circ = la * lb * lc / (4.0 * area)
    return float(r_in / r_circ)


def merge(outer: Complex, inner_patches, floor=None, tol=DEFAULT_TOL, seed=0):
    """Glue rotated dyadic patches into holes of a dyadic background.

    Returns the merged complex and a MergeReport. Raises MergeDegenerate when
    the per-run certification (gap conformity, rotondity floor) fails after
    the refinement rounds.
    """
    floor = tol.rotondity_floor if floor is None else floor
    if not inner_patches:
        return outer, MergeReport(0, 1.0, outer_max_radius(outer), True)
    spec = outer.grid_spec
    if spec is None:
        raise ValueError("merge needs a dyadic outer grid")
    n = spec.n
    holes = _hole_components(spec)
    patch_of_hole = {}
    for p in inner_patches:
        pc = p.grid_spec
        if pc is None:
            raise ValueError("patches must be dyadic complexes")
        center = np.mean([p.face(c).poly.interior_point() for c in p.cells], axis=0)
        zi = spec.cell_index(center)
        hid = next((i for i, h in enumerate(holes) if zi in h), None)
        if hid is None:
            raise MergeDegenerate("patch does not sit inside a hole of the outer grid")
        patch_of_hole.setdefault(hid, []).append(p)

    new_cells = []
    gap_cells = []
    presplit_outer = {}
    presplit_patch = {}
    for hid, patches in sorted(patch_of_hole.items()):
        if len(patches) != 1:
            raise MergeDegenerate("expected exactly one patch per hole")
        patch = patches[0]
        hole = holes[hid]
        if _aligned(spec, patch.grid_spec, tol):
            cells = _aligned_fill(spec, hole, patch, tol)
            gap_cells.extend(cells)
            continue
        if n == 2:
            tris, splits_o, splits_p = _gap_fill_2d(spec, hole, patch, floor, tol)
            gap_cells.extend(tris)
            _merge_split_maps(presplit_outer, splits_o)
            _merge_split_maps(presplit_patch, {id(patch): splits_p})
        else:
            tets, pre_o, pre_p = _gap_fill_3d(spec, hole, patch, floor, tol, seed)
            gap_cells.extend(tets)
            _merge_split_maps(presplit_outer, pre_o)
            _merge_split_maps(presplit_patch, {id(patch): pre_p})

    # assemble: outer cells (with pre-splits applied), patches, gap cells
    members = []
    for z in sorted(spec.index_set):
        if z in presplit_outer:
            members.extend(presplit_outer[z])
        else:
            lo, hi = spec.cell_box(z)
            members.append(Polyhedron.from_box(lo, hi, frame=(spec.origin, spec.basis), tol=tol))
    for p in inner_patches:
        pre = presplit_patch.get(id(p), {})
        ps = p.grid_spec
        for z in sorted(ps.index_set):
            if z in pre:
                members.extend(pre[z])
            else:
                lo, hi = ps.cell_box(z)
                members.append(Polyhedron.from_box(lo, hi, frame=(ps.origin, ps.basis), tol=tol))
    members.extend(gap_cells)
    merged = Complex(members, tol=tol)

    min_rot = 1.0
    for cell in gap_cells:
        from .geometry import enumerate_subfaces

        for f in enumerate_subfaces(cell).all_faces():
            min_rot = min(min_rot, f.shape_stats().rotondity)
    if min_rot < floor:
        raise MergeDegenerate(f"gap rotondity {min_rot:.4f} below floor {floor}")
    report = MergeReport(len(gap_cells), min_rot, outer_max_radius(merged), True)
    rep = validate_complex(merged)
    report.validity = rep.ok
    if not rep.ok:
        raise MergeDegenerate(f"merged complex invalid: {len(rep.violations)} violating pairs")
    return merged, report


def outer_max_radius(S: Complex):
    """Max outer radius over member cells (== over all subfaces by inclusion)."""
    return max(S.face(c).poly.shape_stats().outer_radius for c in S.cells)


def _merge_split_maps(target, extra):
    # holes are pairwise disjoint, so cell keys never collide between fills
    target.update(extra)


def _aligned(outer_spec, patch_spec, tol):
    if np.abs(outer_spec.basis - patch_spec.basis).max() > 1e-9:
        return False
    if abs(outer_spec.stride - patch_spec.stride) > 1e-12:
        return False
    off = (patch_spec.origin - outer_spec.origin) @ outer_spec.basis.T / outer_spec.stride
    return bool(np.all(np.abs(off - np.round(off)) < 1e-9))


def _aligned_fill(spec, hole, patch, tol):
    ps = patch.grid_spec
    off = np.round((ps.origin - spec.origin) @ spec.basis.T / spec.stride).astype(int)
    occupied = {tuple(np.array(z, dtype=int) + off) for z in ps.index_set}
    cells = []
    for z in sorted(hole):
        if z not in occupied:
            lo, hi = spec.cell_box(z)
            cells.append(Polyhedron.from_box(lo, hi, frame=(spec.origin, spec.basis), tol=tol))
    return cells


# -- 2D gap fill ------------------------------------------------------------


def _patch_contains(patch_spec, pts, margin=0.0):
    y = patch_spec.to_frame(pts) / patch_spec.stride
    idx = np.floor(y + 1e-12).astype(int)
    out = np.zeros(len(y), dtype=bool)
    iset = patch_spec.index_set
    for i, (yy, zz) in enumerate(zip(y, idx)):
        z = tuple(zz)
        if z in iset:
            rel = yy - zz
            if np.all(rel > margin) and np.all(rel < 1 - margin):
                out[i] = True
            elif margin <= 0:
                out[i] = True
    return out


def _hole_contains(spec, hole, pts):
    y = spec.to_frame(pts) / spec.stride
    idx = np.floor(y + 1e-12).astype(int)
    return np.array([tuple(z) in hole for z in idx])


def _split_ring_edges(edges, split_keys):
    """Recursively halve every (sub-)edge whose key is in split_keys."""
    cur = list(edges)
    changed = True
    while changed:
        changed = False
        out = []
        for a, b, owner in cur:
            if _ekey(a, b) in split_keys:
                mid = 0.5 * (np.asarray(a, dtype=float) + np.asarray(b, dtype=float))
                out.append((a, mid, owner))
                out.append((mid, b, owner))
                changed = True
            else:
                out.append((a, b, owner))
        cur = out
    return cur


def _ekey(a, b):
    ka, kb = vkey(a), vkey(b)
    return (min(ka, kb), max(ka, kb))


def _gap_fill_2d(spec, hole, patch, floor, tol):
    ps = patch.grid_spec
    ring_a = []
    for a, b, z, ax, dlt in _ring_faces(spec, hole):
        zz = list(z)
        zz[ax] += dlt  # the grid cell owning this ring edge
        ring_a.append((a, b, tuple(zz)))
    ring_b = []
    for fid in patch.boundary_faces():
        v = patch.face_vertices(fid)
        owner_cell = patch.cells_of_face(fid)[0]
        zc = ps.cell_index(patch.face(owner_cell).poly.interior_point())
        ring_b.append((v[0], v[1], zc))

    split_o, split_p = set(), set()
    extra_steiner = []
    for _round in range(4):
        edges = _split_ring_edges(ring_a, split_o)
        edges_b = _split_ring_edges(ring_b, split_p)
        pts = []
        seen = {}
        bkeys = set()
        for a, b, _ in edges + edges_b:
            for q in (a, b):
                k = vkey(q)
                if k not in seen:
                    seen[k] = len(pts)
                    pts.append(np.asarray(q, dtype=float))
            bkeys.add(_ekey(a, b))
        for q in extra_steiner:
            k = vkey(q)
            if k not in seen:
                seen[k] = len(pts)
                pts.append(q)
        P = np.array(pts)
        dela = Delaunay(P)
        keep = []
        for simp in dela.simplices:
            tri = P[simp]
            cen = tri.mean(axis=0)
            area = 0.5 * abs(_cross2(tri[1] - tri[0], tri[2] - tri[0]))
            if area <= 1e-12:
                continue
            if _hole_contains(spec, hole, cen[None, :])[0] and not _patch_contains(ps, cen[None, :])[0]:
                keep.append(simp)
        from collections import Counter

        cnt = Counter()
        for simp in keep:
            for i in range(3):
                cnt[_ekey(P[simp[i]], P[simp[(i + 1) % 3]])] += 1
        bound = {k for k, c in cnt.items() if c == 1}
        conforming = bound == bkeys
        bad = [s for s in keep if _tri_rotondity(*P[s]) < floor]
        if conforming and not bad:
            area_gap = sum(0.5 * abs(_cross2(P[s[1]] - P[s[0]], P[s[2]] - P[s[0]])) for s in keep)
            target = len(hole) * spec.stride ** 2 - sum(
                patch.face(c).poly.measure() for c in patch.cells)
            if abs(area_gap - target) > 1e-6 * max(1.0, target):
                raise MergeDegenerate(f"gap area mismatch: {area_gap:.9f} vs {target:.9f}")
            tris = [Polyhedron.from_vertices(P[s], tol) for s in keep]
            pre_o = _presplit_cells_2d(spec, edges, ring_a, tol)
            pre_p = _presplit_cells_2d(ps, edges_b, ring_b, tol)
            return tris, pre_o, pre_p
        # refinement: halve the longest edge of each offending triangle; on
        # conformity failure split every ring edge once
        ring_keys_o = {_ekey(a, b) for a, b, _ in edges}
        ring_keys_p = {_ekey(a, b) for a, b, _ in edges_b}
        for simp in bad:
            tri = P[simp]
            lens = [np.linalg.norm(tri[(i + 1) % 3] - tri[i]) for i in range(3)]
            i = int(np.argmax(lens))
            key = _ekey(tri[i], tri[(i + 1) % 3])
            if key in ring_keys_o:
                split_o.add(key)
            elif key in ring_keys_p:
                split_p.add(key)
            else:
                extra_steiner.append(0.5 * (tri[i] + tri[(i + 1) % 3]))
        if not conforming:
            split_o |= ring_keys_o
            split_p |= ring_keys_p
    raise MergeDegenerate("2D gap fill failed to certify after refinement rounds")


def _presplit_cells_2d(spec, final_edges, original_ring, tol):
    """Replace grid cells whose ring edge got split by a fan of triangles."""
    original_keys = {_ekey(a, b) for a, b, _ in original_ring}
    extra_by_cell = {}
    for a, b, owner in final_edges:
        if _ekey(a, b) not in original_keys:
            extra_by_cell.setdefault(owner, set()).add(vkey(a))
            extra_by_cell.setdefault(owner, set()).add(vkey(b))
    out = {}
    for z, _keys in extra_by_cell.items():
        lo, hi = spec.cell_box(z)
        cell = Polyhedron.from_box(lo, hi, frame=(spec.origin, spec.basis), tol=tol)
        corner_keys = {vkey(v) for v in cell.vertices}
        boundary_pts = [v for v in cell.vertices]
        for a, b, owner in final_edges:
            if owner != z:
                continue
            for q in (a, b):
                if vkey(q) not in corner_keys and not any(
                        np.allclose(q, bp, atol=1e-12) for bp in boundary_pts):
                    boundary_pts.append(np.asarray(q, dtype=float))
        center = cell.interior_point()
        angles = [np.arctan2(p[1] - center[1], p[0] - center[0]) for p in boundary_pts]
        ordered = [boundary_pts[i] for i in np.argsort(angles)]
        fans = []
        mm = len(ordered)
        for i in range(mm):
            fans.append(Polyhedron.from_vertices(
                [ordered[i], ordered[(i + 1) % mm], center], tol))
        out[z] = fans
    return out


# -- 3D gap fill ------------------------------------------------------------


def _tet_volume(t):
    return abs(float(np.linalg.det(np.stack([t[1] - t[0], t[2] - t[0], t[3] - t[0]])))) / 6.0


def _sat_separated(va, vb, axes, eps):
    for ax in axes:
        nrm = np.linalg.norm(ax)
        if nrm < 1e-12:
            continue
        a = ax / nrm
        pa = va @ a
        pb = vb @ a
        if pa.max() <= pb.min() + eps or pb.max() <= pa.min() + eps:
            return True
    return False


def _tet_box_interior_overlap(tet, box_lo, box_hi, frame, eps=1e-9):
    origin, B = frame
    corners = []
    from itertools import product as _p

    for combo in _p(*[(0, 1)] * 3):
        y = np.array([box_lo[i] if combo[i] == 0 else box_hi[i] for i in range(3)])
        corners.append(origin + y @ B)
    vb = np.array(corners)
    va = np.asarray(tet, dtype=float)
    face_normals = np.array([np.cross(np.delete(va, i, axis=0)[1] - np.delete(va, i, axis=0)[0],
                                      np.delete(va, i, axis=0)[2] - np.delete(va, i, axis=0)[0])
                             for i in range(4)])
    edges = np.array([va[j] - va[i] for i in range(4) for j in range(i + 1, 4)])
    crosses = np.cross(edges[:, None, :], B[None, :, :]).reshape(-1, 3)
    axes = np.vstack([B, face_normals, crosses])
    return not _sat_separated(va, vb, axes, eps)


def _gap_fill_3d(spec, hole, patch, floor, tol, seed):
    ps = patch.grid_spec
    ring_a = _ring_faces(spec, hole)  # (quad, z, ax, dlt)
    ring_b = []
    for fid in patch.boundary_faces():
        poly = patch.face(fid).poly
        quad = [poly.vertices[i] for i in poly.hull_order()]
        owner = patch.cells_of_face(fid)[0]
        zc = ps.cell_index(patch.face(owner).poly.interior_point())
        ring_b.append((quad, zc))

    # Steiner cloud: hole-cell centers kept clear of the patch
    steiner = []
    for z in sorted(hole):
        c = spec.to_ambient((np.array(z, dtype=float) + 0.5) * spec.stride)[0]
        d = _dist_to_patch(ps, c)
        if d > 0.35 * spec.stride:
            steiner.append(c)

    rng = np.random.default_rng(seed)
    for attempt in range(3):
        pts = []
        seen = {}
        for quad, *_ in ring_a:
            for q in quad:
                k = vkey(q)
                if k not in seen:
                    seen[k] = len(pts)
                    pts.append(q)
        for quad, _ in ring_b:
            for q in quad:
                k = vkey(q)
                if k not in seen:
                    seen[k] = len(pts)
                    pts.append(q)
        n_ring = len(pts)
        jitter = 0.0 if attempt == 0 else 0.02 * spec.stride
        for s in steiner:
            pts.append(s + jitter * rng.uniform(-1, 1, size=3))
        P = np.array(pts)
        dela = Delaunay(P)
        keep = []
        for simp in dela.simplices:
            tet = P[simp]
            if _tet_volume(tet) <= 1e-12:
                continue
            cen = tet.mean(axis=0)
            if not _hole_contains(spec, hole, cen[None, :])[0]:
                continue
            if _patch_contains(ps, cen[None, :])[0]:
                continue
            if _tet_box_overlaps_patch(tet, ps):
                continue
            if _tet_escapes_hole(tet, spec, hole):
                continue
            keep.append(simp)
        ok, pre_o, pre_p, tets = _certify_3d(P, keep, ring_a, ring_b, spec, ps, hole, patch, floor, tol)
        if ok:
            return tets, pre_o, pre_p
    raise MergeDegenerate("3D gap fill failed to certify after refinement rounds")


def _dist_to_patch(ps, point):
    y = ps.to_frame(point)[0]
    idx = sorted(ps.index_set)
    arr = np.array(idx, dtype=float) * ps.stride
    best = np.inf
    for lo in arr:
        hi = lo + ps.stride
        d = np.linalg.norm(np.maximum(np.maximum(lo - y, y - hi), 0.0))
        best = min(best, d)
    return best


def _tet_box_overlaps_patch(tet, ps):
    for z in sorted(ps.index_set):
        lo, hi = ps.cell_box(z)
        if _tet_box_interior_overlap(tet, lo, hi, (ps.origin, ps.basis)):
            return True
    return False


def _tet_escapes_hole(tet, spec, hole):
    lo = spec.to_frame(tet).min(axis=0) / spec.stride
    hi = spec.to_frame(tet).max(axis=0) / spec.stride
    from itertools import product as _p

    cells = _p(*[range(int(np.floor(lo[i] - 1e-9)), int(np.ceil(hi[i] + 1e-9)))
                 for i in range(3)])
    for z in cells:
        if z in hole:
            continue
        clo, chi = spec.cell_box(z)
        if _tet_box_interior_overlap(tet, clo, chi, (spec.origin, spec.basis)):
            return True
    return False


def _certify_3d(P, keep, ring_a, ring_b, spec, ps, hole, patch, floor, tol):
    from collections import Counter

    if not keep:
        return False, None, None, None
    cnt = Counter()
    for simp in keep:
        for drop in range(4):
            tri = tuple(sorted(int(simp[i]) for i in range(4) if i != drop))
            cnt[tri] += 1
    boundary = [t for t, c in cnt.items() if c == 1]
    quads_a = {tuple(sorted(vkey(q) for q in quad)): (quad, z, ax, dlt)
               for quad, z, ax, dlt in ring_a}
    quads_b = {tuple(sorted(vkey(q) for q in quad)): (quad, z) for quad, z in ring_b}
    key_of = [vkey(p) for p in P]
    assign_a, assign_b = {}, {}
    for tri in boundary:
        tk = [key_of[i] for i in tri]
        hit = None
        for qk, data in quads_a.items():
            if all(k in qk for k in tk):
                hit = ("a", qk)
                break
        if hit is None:
            for qk, data in quads_b.items():
                if all(k in qk for k in tk):
                    hit = ("b", qk)
                    break
        if hit is None:
            return False, None, None, None
        (assign_a if hit[0] == "a" else assign_b).setdefault(hit[1], []).append(tri)
    # every ring quad must be exactly two triangles across a diagonal
    for quads, assign in ((quads_a, assign_a), (quads_b, assign_b)):
        for qk in quads:
            tris = assign.get(qk, [])
            if len(tris) != 2:
                return False, None, None, None
    vol = sum(_tet_volume(P[s]) for s in keep)
    target = len(hole) * spec.stride ** 3 - sum(patch.face(c).poly.measure() for c in patch.cells)
    if abs(vol - target) > 1e-6 * max(1.0, target):
        return False, None, None, None
    tets = [Polyhedron.from_simplex(P[s], tol) for s in keep]
    worst = min(t.shape_stats().rotondity for t in tets)
    if worst < floor:
        return False, None, None, None
    pre_o = _presplit_cells_3d(spec, quads_a, assign_a, P, tol, outer=True)
    pre_p = _presplit_cells_3d(ps, quads_b, assign_b, P, tol, outer=False)
    return True, pre_o, pre_p, tets


def _presplit_cells_3d(spec, quads, assign, P, tol, outer):
    """Replace ring-adjacent cubes: 2 tets per ring face, pyramids elsewhere."""
    by_cell = {}
    for qk, data in quads.items():
        if outer:
            quad, z, ax, dlt = data
            # owner grid cell is the neighbor on the grid side
            zz = list(z)
            if dlt == 1:
                zz[ax] += 1
            else:
                zz[ax] -= 1
            owner = tuple(zz)
        else:
            quad, owner = data
        by_cell.setdefault(owner, []).append((qk, quad))
    out = {}
    for z, faces in by_cell.items():
        lo, hi = spec.cell_box(z)
        cell = Polyhedron.from_box(lo, hi, frame=(spec.origin, spec.basis), tol=tol)
        center = cell.interior_point()
        split_keys = {}
        for qk, quad in faces:
            tris = assign[qk]
            split_keys[qk] = [tuple(P[i] for i in tri) for tri in tris]
        pieces = []
        from .geometry import enumerate_subfaces

        for f in enumerate_subfaces(cell).levels[2]:
            quad_pts = [f.vertices[i] for i in f.hull_order()]
            fk = tuple(sorted(vkey(q) for q in quad_pts))
            if fk in split_keys:
                for tri in split_keys[fk]:
                    pieces.append(Polyhedron.from_simplex(
                        np.vstack([np.array(tri), center[None, :]]), tol))
            else:
                pieces.append(Polyhedron.from_pyramid(np.array(quad_pts), center, tol))
        out[z] = pieces
    return out
