"""Strict INI-style problem configuration.

Sections and keys are fixed; unknown ones are rejected. All lengths are in
domain units. Example:

    [domain]
    box = -2,-2 ; 2,2
    n = 2
    d = 1

    [input]
    kind = terminals
    points = 1,-2 ; 1,2

    [obstacles]
    box0 = -1,-1 ; 1,1
    clearance = 0

    [oracle]
    kind = connectivity

    [density]
    kind = constant
    value = 1

    [schedule]
    strides = 0.5,0.25,0.125,0.0625

    [tolerances]
    tol_j = 1e-9
    tol_d = 0.05

    [seed]
    value = 7
"""

import configparser
import math

import numpy as np

from .driver import PatchSpec, ProblemSpec
from .errors import ConfigError, DimensionMismatch
from .grids import ObstacleBall, ObstacleBox
from .measure import DensityField
from .simplicial import SimplicialSet

_KNOWN = {
    "domain": {"box", "n", "d"},
    "input": {"kind", "points", "pairs", "simplices"},
    "obstacles": {"clearance"},  # plus box<i> / ball<i> patterns
    "oracle": {"kind"},
    "density": {"kind", "value", "bound", "center", "slope", "stride", "table_seed", "low", "high"},
    "schedule": {"strides"},
    "tolerances": {"tol_j", "tol_d"},
    "seed": {"value"},
    "patch": {"center", "angle_deg", "stride", "cells_along", "cells_across"},
    "optimizer": {"restarts", "candidates"},
}


def _vec(text):
    return np.array([float(t) for t in text.split(",") if t.strip() != ""])


def _vec_list(text):
    return [_vec(part) for part in text.split(";") if part.strip() != ""]


def parse_config(path) -> ProblemSpec:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config {path}")
    for section in cp.sections():
        if section not in _KNOWN:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if section == "obstacles" and (key.startswith("box") or key.startswith("ball")):
                continue
            if key not in _KNOWN[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
    try:
        dom = cp["domain"]
        lo, hi = _vec_list(dom["box"])
        n = int(dom["n"])
        d = int(dom["d"])
    except KeyError as e:
        raise ConfigError(f"missing domain entry: {e}")
    if d >= n:
        raise DimensionMismatch(f"config requires d < n, got d={d}, n={n}")

    try:
        kind = cp["input"]["kind"].strip()
        terminals, pairs, soup = [], [], None
        if kind == "terminals":
            terminals = _vec_list(cp["input"]["points"])
        elif kind == "separation":
            pts = _vec_list(cp["input"]["pairs"])
            if len(pts) % 2:
                raise ConfigError("separation pairs need an even point count")
            pairs = [(pts[i], pts[i + 1]) for i in range(0, len(pts), 2)]
        elif kind == "soup":
            rows = _vec_list(cp["input"]["simplices"])
            simps = [np.array(r).reshape(d + 1, n) for r in rows]
            soup = SimplicialSet.from_simplices(np.array(simps))
        else:
            raise ConfigError(f"unknown input kind '{kind}'")
    except KeyError as e:
        raise ConfigError(f"missing input entry: {e}")

    obstacles = []
    clearance = 0.0
    if cp.has_section("obstacles"):
        clearance = float(cp["obstacles"].get("clearance", "0"))
        for key in sorted(cp["obstacles"]):
            if key == "clearance":
                continue
            if key.startswith("box"):
                blo, bhi = _vec_list(cp["obstacles"][key])
                obstacles.append(ObstacleBox(blo, bhi))
            elif key.startswith("ball"):
                c_r = _vec(cp["obstacles"][key])
                obstacles.append(ObstacleBall(c_r[:-1], float(c_r[-1])))
            else:
                raise ConfigError(f"unknown obstacle key '{key}'")

    oracle_kind = cp["oracle"]["kind"].strip()
    density = _parse_density(cp, lo, hi)
    strides = [float(t) for t in cp["schedule"]["strides"].split(",")]
    tol_j = float(cp["tolerances"].get("tol_j", "1e-9")) if cp.has_section("tolerances") else 1e-9
    tol_d = float(cp["tolerances"].get("tol_d", "0.05")) if cp.has_section("tolerances") else 0.05
    seed = int(cp["seed"]["value"]) if cp.has_section("seed") else 0

    patch = None
    if cp.has_section("patch"):
        pc = cp["patch"]
        patch = PatchSpec(center=_vec(pc["center"]),
                          angle=math.radians(float(pc["angle_deg"])),
                          stride=float(pc["stride"]),
                          cells_along=int(pc["cells_along"]),
                          cells_across=int(pc["cells_across"]))

    restarts, candidates = 16, 64
    if cp.has_section("optimizer"):
        restarts = int(cp["optimizer"].get("restarts", "16"))
        candidates = int(cp["optimizer"].get("candidates", "64"))

    return ProblemSpec(domain_lo=lo, domain_hi=hi, n=n, d=d,
                       oracle_kind=oracle_kind, strides=strides, seed=seed,
                       terminals=terminals, separation_points=pairs, soup=soup,
                       obstacles=obstacles, clearance=clearance, density=density,
                       tol_j=tol_j, tol_d=tol_d, patch=patch,
                       restarts=restarts, n_candidates=candidates)


def _parse_density(cp, lo, hi):
    if not cp.has_section("density"):
        return DensityField.constant(1.0)
    sec = cp["density"]
    kind = sec.get("kind", "constant").strip()
    if kind == "constant":
        return DensityField.constant(float(sec.get("value", "1")))
    if kind == "radial":
        center = _vec(sec["center"])
        slope = float(sec.get("slope", "0"))
        bound = float(sec["bound"])
        return DensityField.radial(center, lambda r: min(bound, 1.0 + slope * r), bound)
    if kind == "cellwise":
        stride = float(sec["stride"])
        seed = int(sec.get("table_seed", "0"))
        low = float(sec.get("low", "1"))
        high = float(sec.get("high", "3"))
        rng = np.random.default_rng(seed)
        counts = np.ceil((hi - lo) / stride).astype(int)
        from itertools import product

        table = {z: low + (high - low) * rng.uniform() for z in
                 product(*[range(int(c)) for c in counts])}
        return DensityField.cellwise(lo, stride, table, m_bound=high)
    raise ConfigError(f"unknown density kind '{kind}'")
