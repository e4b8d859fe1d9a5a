"""Coarse-to-fine minimizing-sequence driver.

Per stride: build (and possibly merge) the grid, seed a skeleton from the
previous solution, optimize under the constraint oracle, and track measure
decay plus local Hausdorff drift on nested windows. After convergence a
semicontinuity probe and a quasiminimality probe are attached to the report.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .grids import (DyadicGridSpec, ObstacleBox, build_dyadic, build_periodic,
                    carve_region, merge, rotation2d, PeriodicTopology)
from .measure import DensityField, Window, hausdorff_measure, local_hausdorff, lsc_probe
from .projection import erode, ff_cascade
from .simplicial import SimplicialSet, faces_to_set, sample_faces
from .skeleton import (ConstraintOracle, OptimizerConfig, Skeleton, admissible,
                       connectivity_oracle, optimize, quasiminimality_probe,
                       separation_oracle)
from .tol import DEFAULT_TOL

log = logging.getLogger(__name__)


@dataclass
class PatchSpec:
    center: np.ndarray
    angle: float
    stride: float
    cells_along: int
    cells_across: int

    def grid_spec(self):
        basis = rotation2d(self.angle)
        half_a = self.cells_along // 2
        half_x = self.cells_across // 2
        idx = frozenset((i, j) for i in range(-half_a, self.cells_along - half_a)
                        for j in range(-half_x, self.cells_across - half_x))
        return DyadicGridSpec(self.stride, np.asarray(self.center, dtype=float), basis, idx)


@dataclass
class ProblemSpec:
    domain_lo: np.ndarray
    domain_hi: np.ndarray
    n: int
    d: int
    oracle_kind: str  # connectivity | separation
    strides: list
    seed: int = 0
    terminals: list = field(default_factory=list)  # points (connectivity)
    separation_points: list = field(default_factory=list)  # point pairs
    soup: SimplicialSet = None
    obstacles: list = field(default_factory=list)
    clearance: float = 0.0
    density: DensityField = None
    tol_j: float = 1e-9
    tol_d: float = 0.05
    patch: PatchSpec = None
    periodic: bool = False
    periodic_axis: int = 0
    restarts: int = 16
    n_candidates: int = 64

    def __post_init__(self):
        self.domain_lo = np.asarray(self.domain_lo, dtype=float)
        self.domain_hi = np.asarray(self.domain_hi, dtype=float)
        if self.d >= self.n:
            raise DimensionMismatch(f"d={self.d} must be below n={self.n}")
        if self.density is None:
            self.density = DensityField.constant(1.0)
        strides = list(self.strides)
        if any(s2 >= s1 for s1, s2 in zip(strides, strides[1:])):
            raise ValueError("stride schedule must be strictly decreasing")


@dataclass
class StrideRecord:
    stride: float
    j_value: float
    h_value: float
    window_dist: list
    cascade_ratios: list
    probe_max: float
    reprojected: bool
    n_faces: int


@dataclass
class RunReport:
    records: list
    verdict: str  # converged | not-converged
    final_complex: object
    final_skeleton: Skeleton
    final_oracle: ConstraintOracle
    problem: ProblemSpec
    lsc: object = None
    probe: object = None
    oracle_recheck: bool = None

    def to_jsonable(self):
        rows = []
        for r in self.records:
            rows.append({
                "stride": r.stride,
                "j_value": r.j_value,
                "h_value": r.h_value,
                "window_dist": [None if (d is None or math.isinf(d)) else d
                                for d in r.window_dist],
                "cascade_ratios": r.cascade_ratios,
                "probe_max": None if (r.probe_max is None or math.isinf(r.probe_max)) else r.probe_max,
                "reprojected": r.reprojected,
                "n_faces": r.n_faces,
            })
        return {
            "records": rows,
            "verdict": self.verdict,
            "lsc_ok": None if self.lsc is None else self.lsc.ok,
            "lsc_margins": None if self.lsc is None else [r.margin for r in self.lsc.rows],
            "probe_max": None if self.probe is None else
            (None if math.isinf(self.probe.max_ratio) else self.probe.max_ratio),
            "oracle_recheck": self.oracle_recheck,
        }


def _grid_index_box(lo, hi, stride):
    span = (hi - lo) / stride
    if np.any(np.abs(span - np.round(span)) > 1e-9):
        raise ValueError("domain box must be an integer number of strides")
    counts = np.round(span).astype(int)
    from itertools import product

    return frozenset(product(*[range(int(c)) for c in counts]))


def _build_stride_complex(problem: ProblemSpec, stride, tol=DEFAULT_TOL):
    idx = _grid_index_box(problem.domain_lo, problem.domain_hi, stride)
    spec = DyadicGridSpec(stride, problem.domain_lo, np.eye(problem.n), idx)
    if problem.periodic:
        topo = PeriodicTopology(problem.domain_hi - problem.domain_lo, problem.domain_lo)
        return build_periodic(spec, topo, tol=tol), None
    S = build_dyadic(spec, tol=tol)
    report = None
    if problem.obstacles:
        S = carve_region(S, problem.obstacles, problem.clearance, tol=tol)
    if problem.patch is not None:
        patch_grid = build_dyadic(problem.patch.grid_spec(), tol=tol)
        pts = np.vstack([patch_grid.face(c).poly.vertices for c in patch_grid.cells])
        hole = ObstacleBox(pts.min(axis=0) - 1e-9, pts.max(axis=0) + 1e-9)
        S = carve_region(S, [hole], 2.0 * stride, tol=tol)
        S, report = merge(S, [patch_grid], tol=tol)
    return S, report


def _nearest_vertex_faces(S, points):
    vids = S.faces_of_dim(0)
    coords = np.array([S.face(f).poly.vertices[0] for f in vids])
    out = []
    for p in points:
        i = int(np.argmin(np.linalg.norm(coords - np.asarray(p, dtype=float), axis=1)))
        out.append(vids[i])
    return out


def _containing_cells(S, points):
    out = []
    for p in points:
        cells = S.locate_cells(np.asarray(p, dtype=float))
        if not cells:
            raise ValueError(f"point {p} is outside the grid")
        out.append(cells[0])
    return out


def _make_oracle(problem: ProblemSpec, S):
    if problem.oracle_kind == "connectivity":
        terms = _nearest_vertex_faces(S, problem.terminals)
        return connectivity_oracle(terms), frozenset(terms)
    if problem.oracle_kind == "separation":
        pairs = []
        for a, b in problem.separation_points:
            ca, cb = _containing_cells(S, [a, b])
            pairs.append((ca, cb))
        return separation_oracle(pairs), frozenset()
    if problem.oracle_kind == "periodic":
        from .skeleton import periodic_oracle

        mode = "primal" if problem.d == 1 else "dual"
        return periodic_oracle(problem.periodic_axis, mode=mode), frozenset()
    raise ValueError(f"driver oracle kind {problem.oracle_kind} not supported")


def _full_skeleton(S, d, frozen):
    return Skeleton(frozenset(S.faces_of_dim(d)) | frozen, frozen)


def _reproject(S, prev_polys, d, frozen):
    """Fine faces whose barycenter lies inside a retained coarse face."""
    faces = set()
    for fid in S.faces_of_dim(d):
        b = S.face(fid).poly.interior_point()
        for poly in prev_polys:
            if poly.contains(b, margin=1e-9):
                faces.add(fid)
                break
    return Skeleton(frozenset(faces) | frozen, frozen)


def _windows(problem: ProblemSpec):
    base = Window(problem.domain_lo, problem.domain_hi)
    return [base.scaled(f) for f in (0.9, 0.75, 0.5)]


def run(problem: ProblemSpec, tol=DEFAULT_TOL) -> RunReport:
    """Execute the stride schedule and certify convergence diagnostics."""
    rng = np.random.default_rng(problem.seed)
    windows = _windows(problem)
    records = []
    prev_polys = None
    prev_samples = None
    stride_sets = []
    final = None
    for k, stride in enumerate(problem.strides):
        S, _merge_report = _build_stride_complex(problem, stride, tol)
        oracle, frozen = _make_oracle(problem, S)
        cascade_ratios = []
        reprojected = False
        init = None
        if problem.soup is not None:
            E_in = problem.soup if prev_polys is None else _polys_to_set(prev_polys, problem.d)
            img, _pmap, ledger = ff_cascade(S, E_in, problem.d,
                                            n_candidates=problem.n_candidates,
                                            seed=int(rng.integers(2 ** 31)), tol=tol)
            cascade_ratios = [row.ratio for row in ledger]
            skel0 = erode(S, img, problem.d, tol=tol)
            init = Skeleton(skel0.face_ids | frozen, frozen)
            if not admissible(S, init, oracle, problem.d):
                init = _full_skeleton(S, problem.d, frozen)
        elif prev_polys is not None and problem.patch is None:
            init = _reproject(S, prev_polys, problem.d, frozen)
            reprojected = admissible(S, init, oracle, problem.d)
            if not reprojected:
                init = _full_skeleton(S, problem.d, frozen)
        else:
            init = _full_skeleton(S, problem.d, frozen)
        cfg = OptimizerConfig(d=problem.d, mode="auto", restarts=problem.restarts,
                              seed=int(rng.integers(2 ** 31)))
        outcome = optimize(S, init, oracle, problem.density, cfg)
        skel = outcome.skeleton
        samples = sample_faces(S, sorted(skel.face_ids), stride / 10.0)
        dists = []
        for w in windows:
            if prev_samples is None:
                dists.append(None)
            else:
                dists.append(local_hausdorff(w, prev_samples, samples))
        probe = quasiminimality_probe(S, skel, oracle, problem.d, trials=32,
                                      seed=int(rng.integers(2 ** 31)))
        records.append(StrideRecord(stride, outcome.value,
                                    hausdorff_measure(skel.face_ids, S, problem.d),
                                    dists, cascade_ratios, probe.max_ratio,
                                    reprojected, len(skel.face_ids)))
        prev_polys = [S.face(f).poly for f in sorted(skel.face_ids)]
        prev_samples = samples
        stride_sets.append(faces_to_set(S, sorted(skel.face_ids), problem.d))
        final = (S, skel, oracle)
    verdict = _convergence_verdict(records, problem)
    S, skel, oracle = final
    report = RunReport(records, verdict, S, skel, oracle, problem)
    if verdict == "converged":
        report.lsc = lsc_probe(stride_sets, stride_sets[-1], problem.density,
                               windows, tol=1e-9)
        report.probe = quasiminimality_probe(S, skel, oracle, problem.d,
                                             trials=200, seed=problem.seed + 1)
        report.oracle_recheck = admissible(S, skel, oracle, problem.d)
    return report


def _polys_to_set(polys, d):
    simps = []
    from .simplicial import _fan_triangulate

    for poly in polys:
        if poly.dim != d:
            continue
        if d == 1:
            simps.append(poly.vertices[:2])
        else:
            ring = [poly.vertices[i] for i in poly.hull_order()]
            simps.extend(_fan_triangulate(ring))
    return SimplicialSet(np.array(simps), d, [{} for _ in simps])


def _convergence_verdict(records, problem):
    deltas = []
    for prev, cur in zip(records, records[1:]):
        dj = abs(cur.j_value - prev.j_value)
        dw = [d for d in cur.window_dist if d is not None]
        dmax = max(dw) if dw else math.inf
        deltas.append(dj < problem.tol_j + 1e-15 and dmax < problem.tol_d)
    take = deltas[-2:] if len(deltas) >= 2 else deltas
    if take and all(take):
        return "converged"
    return "not-converged"


@dataclass
class GaugeRow:
    delta: float
    worst_ratio_minus_one: float
    trials: int


def gauge_report(report: RunReport, seed=0, trials_per_scale=64):
    """Empirical gauge curve: worst probed deformation ratio minus one for
    probes whose support fits in a ball of each dyadic radius."""
    if report.verdict != "converged":
        return []
    S = report.final_complex
    skel = report.final_skeleton
    d = report.problem.d
    stride = report.records[-1].stride
    diam = float(np.linalg.norm(report.problem.domain_hi - report.problem.domain_lo))
    rows = []
    scale = stride * math.sqrt(S.n)  # support of one (d+1)-face probe
    delta = stride
    while delta <= diam:
        if delta >= scale:
            probe = quasiminimality_probe(S, skel, report.final_oracle, d,
                                          trials=trials_per_scale, seed=seed)
            worst = probe.max_ratio - 1.0 if probe.effective else 0.0
        else:
            worst = 0.0
        rows.append(GaugeRow(delta, worst, trials_per_scale))
        delta *= 2.0
    return rows
