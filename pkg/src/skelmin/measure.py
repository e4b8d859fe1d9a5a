"""Hausdorff measures, weighted functionals and (local) Hausdorff distances.

For piecewise-linear sets the d-dimensional Hausdorff measure equals the sum
of simplex volumes, so everything here is combinatorial plus quadrature.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .simplicial import SimplicialSet, clip_set_to_box, simplex_volume
from .tol import DEFAULT_TOL


@dataclass(frozen=True)
class DensityField:
    """Bounded density h with values in [1, M]; kinds: constant, radial
    (profile of the distance to a center), cellwise (table keyed by grid
    cell, upper-cell convention on shared boundaries)."""

    kind: str
    m_bound: float
    value: float = 1.0
    center: np.ndarray = None
    profile: object = None  # callable r -> h
    grid_origin: np.ndarray = None
    grid_stride: float = 1.0
    table: dict = None
    modulus: object = None  # optional gauge callable r -> h~(r)

    @classmethod
    def constant(cls, value=1.0):
        return cls("constant", m_bound=max(1.0, float(value)), value=float(value))

    @classmethod
    def radial(cls, center, profile, m_bound, modulus=None):
        return cls("radial", m_bound=float(m_bound), center=np.asarray(center, dtype=float),
                   profile=profile, modulus=modulus)

    @classmethod
    def cellwise(cls, origin, stride, table, m_bound=None):
        tab = {tuple(int(c) for c in k): float(v) for k, v in table.items()}
        m = max(tab.values()) if m_bound is None else float(m_bound)
        return cls("cellwise", m_bound=m, grid_origin=np.asarray(origin, dtype=float),
                   grid_stride=float(stride), table=tab)

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "constant":
            vals = np.full(len(pts), self.value)
        elif self.kind == "radial":
            r = np.linalg.norm(pts - self.center, axis=1)
            vals = np.array([float(self.profile(x)) for x in r])
        elif self.kind == "cellwise":
            rel = (pts - self.grid_origin) / self.grid_stride
            idx = np.floor(rel + 1e-12).astype(int)
            vals = np.array([self.table.get(tuple(z), 1.0) for z in idx])
        else:
            raise ValueError(f"unknown density kind {self.kind}")
        if np.any(vals < 1.0 - 1e-12) or np.any(vals > self.m_bound + 1e-12):
            raise ValueError("density values escaped the declared [1, M] bounds")
        return vals

    def spot_check_modulus(self, points, rng, trials=256):
        """Sample the declared modulus bound h(y) <= (1 + h~(|x-y|)) h(x)."""
        if self.modulus is None:
            return True
        pts = np.atleast_2d(points)
        ok = True
        for _ in range(trials):
            i, j = rng.integers(0, len(pts), size=2)
            hx, hy = self(pts[i : i + 1])[0], self(pts[j : j + 1])[0]
            r = float(np.linalg.norm(pts[i] - pts[j]))
            if r == 0.0:
                continue
            if hy > (1.0 + float(self.modulus(r))) * hx + 1e-9:
                ok = False
        return ok


@dataclass
class MeasureReport:
    hausdorff: float
    weighted: float
    per_simplex: list = field(default_factory=list)
    quadrature_error: float = 0.0

    def to_jsonable(self):
        return {"hausdorff": self.hausdorff, "weighted": self.weighted,
                "quadrature_error": self.quadrature_error,
                "per_simplex": [[h, w] for h, w in self.per_simplex]}

    def csv_rows(self):
        """Rows for the fixed `index,hausdorff,weighted` ledger columns."""
        return [(i, h, w) for i, (h, w) in enumerate(self.per_simplex)]


def hausdorff_measure(E, complex_=None, d=None):
    """H^d of a simplicial set, or of a skeleton's dim-d faces."""
    if isinstance(E, SimplicialSet):
        return E.measure()
    # treat E as an iterable of face ids within complex_
    if complex_ is None or d is None:
        raise ValueError("skeleton measure needs the complex and d")
    total = 0.0
    for fid in E:
        f = complex_.face(fid)
        if f.dim == d:
            total += f.poly.measure()
    return float(total)


_GAUSS_SEG = (np.array([0.5 - math.sqrt(3.0 / 5.0) / 2.0, 0.5, 0.5 + math.sqrt(3.0 / 5.0) / 2.0]),
              np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0]))
# degree-3 symmetric rule on the triangle
_TRI_PTS = np.array([[1 / 3, 1 / 3], [0.6, 0.2], [0.2, 0.6], [0.2, 0.2]])
_TRI_W = np.array([-27.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0])


def _quad_simplex(verts, h, d):
    vol = simplex_volume(verts)
    if vol <= 0.0:
        return 0.0
    if d == 1:
        t, w = _GAUSS_SEG
        pts = verts[0][None, :] + t[:, None] * (verts[1] - verts[0])[None, :]
        return vol * float(np.dot(w, h(pts)))
    a, b, c = verts
    pts = a[None, :] + _TRI_PTS[:, 0:1] * (b - a)[None, :] + _TRI_PTS[:, 1:2] * (c - a)[None, :]
    return vol * float(np.dot(_TRI_W, h(pts)))


def _children(verts, d):
    if d == 1:
        mid = 0.5 * (verts[0] + verts[1])
        return [np.stack([verts[0], mid]), np.stack([mid, verts[1]])]
    a, b, c = verts
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    return [np.stack(t) for t in ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca))]


def _adaptive(verts, h, d, tol, depth):
    coarse = _quad_simplex(verts, h, d)
    kids = _children(verts, d)
    fine = sum(_quad_simplex(k, h, d) for k in kids)
    err = abs(fine - coarse)
    if err <= tol * max(abs(fine), 1e-30) or depth >= 10:
        return fine, err
    total, terr = 0.0, 0.0
    for k in kids:
        v, e = _adaptive(k, h, d, tol, depth + 1)
        total += v
        terr += e
    return total, terr


def weighted_measure(E, h: DensityField, complex_=None, d=None, tol=None):
    """J_h^d: the density integrated against H^d over the set."""
    quad_tol = DEFAULT_TOL.quad if tol is None else tol
    if not isinstance(E, SimplicialSet):
        from .simplicial import faces_to_set

        E = faces_to_set(complex_, list(E), d)
    total = 0.0
    for s in E.simplices:
        v, _ = _adaptive(s, h, E.dim, quad_tol, 0)
        total += v
    return float(total)


def measure_report(E, h: DensityField, tol=None) -> MeasureReport:
    quad_tol = DEFAULT_TOL.quad if tol is None else tol
    per = []
    tot_w = 0.0
    tot_err = 0.0
    for s in E.simplices:
        v, e = _adaptive(s, h, E.dim, quad_tol, 0)
        per.append((simplex_volume(s), v))
        tot_w += v
        tot_err += e
    return MeasureReport(E.measure(), float(tot_w), per, float(tot_err))


# -- Hausdorff distances -----------------------------------------------------


def hausdorff_distance(A, B, periods=None):
    """Symmetric max-min distance between point clouds; d(empty, X) = inf."""
    A = np.atleast_2d(np.asarray(A, dtype=float)) if A is not None and len(A) else np.zeros((0, 1))
    B = np.atleast_2d(np.asarray(B, dtype=float)) if B is not None and len(B) else np.zeros((0, 1))
    if len(A) == 0 and len(B) == 0:
        return 0.0
    if len(A) == 0 or len(B) == 0:
        return math.inf
    if periods is not None:
        best = None
        D = None
        from itertools import product

        per = np.asarray(periods, dtype=float)
        shifts = [np.array(s) * per for s in product((-1.0, 0.0, 1.0), repeat=per.size)]
        for sh in shifts:
            Dk = cdist(A + sh, B)
            D = Dk if D is None else np.minimum(D, Dk)
    else:
        D = cdist(A, B)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


@dataclass(frozen=True)
class Window:
    """Axis box used to localize distances and measures."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))

    def mask(self, pts):
        if len(pts) == 0:
            return np.zeros(0, dtype=bool)
        return np.all((pts >= self.lo - 1e-12) & (pts <= self.hi + 1e-12), axis=1)

    def clip_set(self, E: SimplicialSet) -> SimplicialSet:
        return clip_set_to_box(E, self.lo, self.hi)

    def scaled(self, factor):
        c = 0.5 * (self.lo + self.hi)
        half = 0.5 * (self.hi - self.lo) * factor
        return Window(c - half, c + half)


def local_hausdorff(window: Window, A, B, periods=None):
    A = np.atleast_2d(np.asarray(A, dtype=float)) if A is not None and len(A) else np.zeros((0, window.lo.size))
    B = np.atleast_2d(np.asarray(B, dtype=float)) if B is not None and len(B) else np.zeros((0, window.lo.size))
    return hausdorff_distance(A[window.mask(A)], B[window.mask(B)], periods=periods)


# -- lower-semicontinuity probe ----------------------------------------------


@dataclass
class LscRow:
    window: Window
    j_limit: float
    liminf: float
    margin: float
    ok: bool


@dataclass
class LscReport:
    rows: list
    ok: bool


def lsc_probe(sequence, limit, h: DensityField, windows, tol=1e-9) -> LscReport:
    """Check J_h(limit & V) <= liminf_k J_h(E_k & V) + tol on each window.

    The (finite) liminf is estimated by the min over the whole tail, which
    only strengthens the check. Margin is liminf + tol - J_h(limit & V).
    """
    rows = []
    for w in windows:
        j_lim = weighted_measure(w.clip_set(limit), h)
        vals = [weighted_measure(w.clip_set(E), h) for E in sequence]
        liminf = min(vals) if vals else math.inf
        margin = liminf + tol - j_lim
        rows.append(LscRow(w, j_lim, liminf, margin, margin >= 0.0))
    return LscReport(rows, all(r.ok for r in rows))
