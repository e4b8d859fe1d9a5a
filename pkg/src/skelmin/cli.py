"""Deterministic command line interface.

Exit codes: 0 success, 1 domain error (typed message on stderr), 2 usage.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import parse_config
from .driver import gauge_report, run
from .errors import SkelminError
from .offio import export_mesh, import_mesh
from .projection import erode, ff_cascade
from .simplicial import faces_to_set

log = logging.getLogger("skelmin")

CASCADE_HEADER = "# skelmin-cascade-ledger-v1\nstride,level,measure_before,measure_after,ratio\n"
MOVES_HEADER = "# skelmin-move-ledger-v1\niter,move,face,delta,accepted\n"


def _out_dir(args):
    out = args.out or os.environ.get("SKELMIN_OUT", ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_cascade_csv(path, stride, rows):
    with open(path, "w") as fh:
        fh.write(CASCADE_HEADER)
        for r in rows:
            fh.write(f"{stride!r},{r.level},{r.measure_before!r},{r.measure_after!r},{r.ratio!r}\n")


def _write_moves_csv(path, rows):
    with open(path, "w") as fh:
        fh.write(MOVES_HEADER)
        for r in rows:
            fh.write(f"{r.iteration},{r.move},{r.face},{r.delta!r},{int(r.accepted)}\n")


def _build_problem(args):
    if not args.config:
        raise SkelminError("this subcommand needs --config")
    problem = parse_config(args.config)
    if args.seed is not None:
        problem.seed = args.seed
    return problem


def _stride_complex(problem, stride):
    from .driver import _build_stride_complex

    return _build_stride_complex(problem, stride)


def cmd_grid_build(args):
    problem = _build_problem(args)
    out = _out_dir(args)
    S, _ = _stride_complex(problem, problem.strides[0])
    stats = S.aggregate_stats()
    export_mesh(frozenset(S.faces_of_dim(problem.d)), out / "grid_skeleton.off", complex_=S)
    print(f"cells={len(S.cells)} faces={len(S.faces)} "
          f"rotondity={stats.rotondity:.6f} outer={stats.outer_radius:.6f}")
    return 0


def cmd_grid_merge(args):
    problem = _build_problem(args)
    out = _out_dir(args)
    if problem.patch is None:
        raise SkelminError("grid merge needs a [patch] section")
    S, report = _stride_complex(problem, problem.strides[0])
    export_mesh(frozenset(S.faces_of_dim(problem.d)), out / "merged_skeleton.off", complex_=S)
    print(f"cells={len(S.cells)} gap_cells={report.gap_cell_count} "
          f"min_rotondity={report.measured_min_rotondity:.6f} valid={report.validity}")
    return 0


def cmd_project(args):
    problem = _build_problem(args)
    out = _out_dir(args)
    if problem.soup is None:
        raise SkelminError("project needs input kind = soup")
    S, _ = _stride_complex(problem, problem.strides[0])
    img, _pmap, ledger = ff_cascade(S, problem.soup, problem.d,
                                    n_candidates=problem.n_candidates, seed=problem.seed)
    _write_cascade_csv(out / "cascade.csv", problem.strides[0], ledger)
    export_mesh(img, out / "projected.off")
    print(f"measure_in={problem.soup.measure()!r} measure_out={img.measure()!r}")
    return 0


def cmd_erode(args):
    problem = _build_problem(args)
    out = _out_dir(args)
    if problem.soup is None:
        raise SkelminError("erode needs input kind = soup")
    S, _ = _stride_complex(problem, problem.strides[0])
    img, _pmap, _ledger = ff_cascade(S, problem.soup, problem.d,
                                     n_candidates=problem.n_candidates, seed=problem.seed)
    skel = erode(S, img, problem.d)
    export_mesh(skel.face_ids, out / "skeleton.off", complex_=S)
    from .measure import hausdorff_measure

    print(f"faces={len(skel.face_ids)} measure={hausdorff_measure(skel.face_ids, S, problem.d)!r}")
    return 0


def cmd_optimize(args):
    problem = _build_problem(args)
    out = _out_dir(args)
    from .driver import _full_skeleton, _make_oracle
    from .skeleton import OptimizerConfig, optimize

    S, _ = _stride_complex(problem, problem.strides[0])
    oracle, frozen = _make_oracle(problem, S)
    init = _full_skeleton(S, problem.d, frozen)
    cfg = OptimizerConfig(d=problem.d, restarts=problem.restarts, seed=problem.seed)
    outcome = optimize(S, init, oracle, problem.density, cfg)
    _write_moves_csv(out / "moves.csv", outcome.move_log)
    export_mesh(outcome.skeleton.face_ids, out / "optimized.off", complex_=S)
    print(f"value={outcome.value!r} faces={len(outcome.skeleton.face_ids)} "
          f"certificate={outcome.certificate}")
    return 0


def cmd_minimize(args):
    problem = _build_problem(args)
    out = _out_dir(args)
    report = run(problem)
    with open(out / "run_report.jsonl", "w") as fh:
        for row in report.to_jsonable()["records"]:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
        fh.write(json.dumps({"verdict": report.verdict,
                             "lsc_ok": None if report.lsc is None else report.lsc.ok,
                             "probe_max": None if report.probe is None or
                             not np.isfinite(report.probe.max_ratio)
                             else report.probe.max_ratio}, sort_keys=True) + "\n")
    with open(out / "strides.csv", "w") as fh:
        fh.write("# skelmin-stride-ledger-v1\nstride,j_value,h_value,reprojected,n_faces\n")
        for r in report.records:
            fh.write(f"{r.stride!r},{r.j_value!r},{r.h_value!r},{int(r.reprojected)},{r.n_faces}\n")
    export_mesh(report.final_skeleton.face_ids, out / "final_skeleton.off",
                complex_=report.final_complex)
    gauge = gauge_report(report)
    with open(out / "gauge.csv", "w") as fh:
        fh.write("# skelmin-gauge-v1\ndelta,worst_ratio_minus_one,trials\n")
        for g in gauge:
            fh.write(f"{g.delta!r},{g.worst_ratio_minus_one!r},{g.trials}\n")
    print(f"verdict={report.verdict} final_J={report.records[-1].j_value!r}")
    return 0


def cmd_export(args):
    out = _out_dir(args)
    verts, faces = import_mesh(args.input)
    # round-trip re-export with canonical ordering
    simps = []
    from .offio import import_as_set

    E = import_as_set(args.input)
    export_mesh(E, out / Path(args.input).name)
    print(f"vertices={len(verts)} faces={len(faces)}")
    return 0


def cmd_verify(args):
    """Quick invariant battery across the modules."""
    failures = []

    def check(name, fn):
        try:
            ok = fn()
        except Exception as e:  # noqa: BLE001 - report, do not crash the suite
            ok = False
            log.error("verify %s raised: %s", name, e)
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        if not ok:
            failures.append(name)

    from .geometry import validate_complex
    from .grids import DyadicGridSpec, build_dyadic

    def dyadic_rotondity():
        spec = DyadicGridSpec(0.5, np.zeros(2), np.eye(2),
                              frozenset({(0, 0), (1, 0), (0, 1)}))
        S = build_dyadic(spec)
        st = S.aggregate_stats()
        return abs(st.rotondity - 1 / np.sqrt(2)) < 1e-9 and validate_complex(S).ok

    def magnetic_lipschitz():
        from .projection import ConeRegion, magnetic_project

        K = ConeRegion(np.zeros(2), 1.0, 0.3, np.array([[1.0, 0.0]]))
        rng = np.random.default_rng(0)
        pts = rng.uniform(-1.5, 1.5, size=(1500, 2))
        img = magnetic_project(K, 0.25, pts)
        i = rng.integers(0, 1500, 20000)
        j = rng.integers(0, 1500, 20000)
        m = i != j
        ratio = (np.linalg.norm(img[i[m]] - img[j[m]], axis=1)
                 / np.linalg.norm(pts[i[m]] - pts[j[m]], axis=1)).max()
        return ratio <= 2 + K.plane_gap() / 0.25 + 1e-6

    def erosion_fixed_point():
        spec = DyadicGridSpec(1.0, np.zeros(2), np.eye(2), frozenset({(0, 0)}))
        S = build_dyadic(spec)
        E = faces_to_set(S, S.faces_of_dim(1)[:2], 1)
        skel = erode(S, E, 1)
        return erode(S, skel, 1).face_ids == skel.face_ids

    def off_round_trip():
        import tempfile

        spec = DyadicGridSpec(1.0, np.zeros(2), np.eye(2), frozenset({(0, 0)}))
        S = build_dyadic(spec)
        with tempfile.TemporaryDirectory() as tmp:
            p = Path(tmp) / "m.off"
            export_mesh(frozenset(S.faces_of_dim(1)), p, complex_=S)
            from .offio import face_key_set

            keys = face_key_set(p)
            want = {S.faces[f].vkeys for f in S.faces_of_dim(1)}
            return keys == want

    check("dyadic-rotondity", dyadic_rotondity)
    check("magnetic-lipschitz", magnetic_lipschitz)
    check("erosion-fixed-point", erosion_fixed_point)
    check("off-round-trip", off_round_trip)
    return 1 if failures else 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="skelmin",
                                     description="measure minimization over polyhedral skeletons")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="problem configuration file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory (or $SKELMIN_OUT)")
        p.add_argument("--log-level", default="warning")

    grid = sub.add_parser("grid", help="grid construction")
    gsub = grid.add_subparsers(dest="grid_command", required=True)
    for name, fn in (("build", cmd_grid_build), ("merge", cmd_grid_merge)):
        p = gsub.add_parser(name)
        common(p)
        p.set_defaults(fn=fn)
    for name, fn in (("project", cmd_project), ("erode", cmd_erode),
                     ("optimize", cmd_optimize), ("minimize", cmd_minimize),
                     ("verify", cmd_verify)):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(fn=fn)
    p = sub.add_parser("export")
    common(p)
    p.add_argument("--input", required=True, help="OFF file to round-trip")
    p.set_defaults(fn=cmd_export)

    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.WARNING))
    try:
        return args.fn(args)
    except (SkelminError, ValueError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
