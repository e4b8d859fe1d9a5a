"""Finite minimization of weighted measure over admissible skeletons.

A skeleton is a set of subface ids of dimension <= d inside a fixed complex.
Constraint oracles encode the topological class at the discrete level; the
built-in kinds (connectivity, separation, periodic wrap, boundary chain) are
all invariant under the deformations the probes generate.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InitInadmissible
from .measure import DensityField, weighted_measure


@dataclass(frozen=True)
class Skeleton:
    face_ids: frozenset
    frozen_ids: frozenset = frozenset()

    def with_faces(self, faces):
        return Skeleton(frozenset(faces), self.frozen_ids)


@dataclass(frozen=True)
class ConstraintOracle:
    kind: str  # connectivity | separation | periodic_cycle | chain | custom
    terminals: tuple = ()
    pairs: tuple = ()
    axis: int = 0
    mode: str = "primal"  # periodic_cycle: primal wrap (d=1) or dual blocking
    frame: frozenset = frozenset()  # chain: boundary (d-1)-face ids (mod 2)
    predicate: object = None  # custom: callable(skeleton) -> bool


def connectivity_oracle(terminal_face_ids):
    return ConstraintOracle("connectivity", terminals=tuple(sorted(terminal_face_ids)))


def separation_oracle(cell_pairs):
    return ConstraintOracle("separation", pairs=tuple(tuple(p) for p in cell_pairs))


def periodic_oracle(axis, mode="primal"):
    return ConstraintOracle("periodic_cycle", axis=axis, mode=mode)


def spanning_chain_oracle(frame_face_ids):
    """Admissible iff the mod-2 boundary of the skeleton's d-faces equals the
    given frame of (d-1)-faces."""
    return ConstraintOracle("chain", frame=frozenset(frame_face_ids))


class _UnionFind:
    def __init__(self):
        self.parent = {}
        self.pot = {}

    def add(self, x, dim):
        if x not in self.parent:
            self.parent[x] = x
            self.pot[x] = np.zeros(dim)

    def find(self, x):
        path = []
        while self.parent[x] != x:
            path.append(x)
            x = self.parent[x]
        acc = np.zeros_like(self.pot[x])
        for y in reversed(path):
            acc = acc + self.pot[y]
            self.parent[y] = x
            self.pot[y] = acc.copy()
        return x

    def union(self, a, b, delta):
        """Declare pos(b) - pos(a) = delta; returns the closing mismatch when
        a and b were already connected, else None."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return (self.pot[a] + delta) - self.pot[b]
        self.parent[rb] = ra
        self.pot[rb] = self.pot[a] + delta - self.pot[b]
        return None


def _faces_connected(S, face_ids):
    """Connected components of the face set under shared-vertex adjacency."""
    uf = _UnionFind()
    seen_vertex = {}
    for fid in face_ids:
        uf.add(fid, 1)
        for key in S.face(fid).vkeys:
            if key in seen_vertex:
                uf.union(fid, seen_vertex[key], np.zeros(1))
            else:
                seen_vertex[key] = fid
    return uf


def admissible(S, skel: Skeleton, oracle: ConstraintOracle, d=None) -> bool:
    """Evaluate the constraint oracle on a skeleton."""
    faces = skel.face_ids
    if oracle.kind == "custom":
        return bool(oracle.predicate(skel))
    if oracle.kind == "connectivity":
        if not set(oracle.terminals) <= faces:
            return False
        uf = _faces_connected(S, faces)
        roots = {uf.find(t) for t in oracle.terminals}
        return len(roots) <= 1
    if oracle.kind == "separation":
        if d is not None and d != S.k - 1:
            raise DimensionMismatch("separation oracle needs d = n - 1")
        uf = _UnionFind()
        for c in S.cells:
            uf.add(c, 1)
        for fid in S.faces_of_dim(S.k - 1):
            if fid in faces:
                continue
            owners = S.cells_of_face(fid)
            if len(owners) == 2:
                uf.union(owners[0], owners[1], np.zeros(1))
        for a, b in oracle.pairs:
            if uf.find(a) == uf.find(b):
                return False
        return True
    if oracle.kind == "periodic_cycle":
        if S.periodic is None:
            raise DimensionMismatch("periodic oracle needs a periodic complex")
        per = S.periodic.periods
        if oracle.mode == "primal":
            uf = _UnionFind()
            wrapped = False
            for fid in faces:
                f = S.face(fid)
                if f.dim != 1:
                    continue
                a, b = f.poly.vertices[0], f.poly.vertices[1]
                ka = tuple(S.periodic.wrap(a))
                kb = tuple(S.periodic.wrap(b))
                ka = tuple(round(c, 9) for c in ka)
                kb = tuple(round(c, 9) for c in kb)
                uf.add(ka, len(per))
                uf.add(kb, len(per))
                delta = S.periodic.min_image(b - a)
                gap = uf.union(ka, kb, delta)
                if gap is not None and abs(gap[oracle.axis]) > per[oracle.axis] / 2:
                    wrapped = True
            return wrapped
        # dual blocking: no wrapping dual cycle may avoid the skeleton
        uf = _UnionFind()
        for c in S.cells:
            uf.add(c, len(per))
        for fid in S.faces_of_dim(S.k - 1):
            if fid in faces:
                continue
            owners = S.cells_of_face(fid)
            if len(owners) != 2:
                continue
            ca = S.face(owners[0]).poly.interior_point()
            cb = S.face(owners[1]).poly.interior_point()
            delta = S.periodic.min_image(cb - ca)
            gap = uf.union(owners[0], owners[1], delta)
            if gap is not None and abs(gap[oracle.axis]) > per[oracle.axis] / 2:
                return False
        return True
    if oracle.kind == "chain":
        target = set(oracle.frame)
        bound = set()
        for fid in faces:
            f = S.face(fid)
            if f.dim != _chain_dim(S, oracle):
                continue
            for ch in S.children[fid]:
                bound ^= {ch}
        return bound == target
    raise ValueError(f"unknown oracle kind {oracle.kind}")


def _chain_dim(S, oracle):
    # frame faces have dimension d-1; the chain lives one dimension up
    if not oracle.frame:
        return S.k - 1
    any_id = next(iter(oracle.frame))
    return S.face(any_id).dim + 1


# -- optimization ------------------------------------------------------------


@dataclass
class OptimizerConfig:
    d: int
    mode: str = "auto"  # auto | exhaustive | local
    exhaustive_cap: int = 22
    restarts: int = 16
    seed: int = 0
    candidate_pool: tuple = None  # face ids; default: all dim-d faces
    keep_log: bool = True


@dataclass
class MoveRow:
    iteration: int
    move: str
    face: int
    delta: float
    accepted: bool


@dataclass
class OptimizationOutcome:
    skeleton: Skeleton
    value: float
    cores: dict
    move_log: list
    certificate: str


def face_weights(S, face_ids, h: DensityField, d):
    from .simplicial import faces_to_set

    w = {}
    for fid in face_ids:
        f = S.face(fid)
        if f.dim == d:
            w[fid] = weighted_measure(faces_to_set(S, [fid], d), h)
        else:
            w[fid] = 0.0
    return w


def skeleton_value(S, skel: Skeleton, h: DensityField, d):
    from .simplicial import faces_to_set

    dfaces = [f for f in skel.face_ids if S.face(f).dim == d]
    if not dfaces:
        return 0.0
    return weighted_measure(faces_to_set(S, sorted(dfaces), d), h)


def core_decompose(S, skel: Skeleton):
    """Partition of the skeleton's maximal faces by dimension."""
    implied = set()
    for fid in skel.face_ids:
        stack = list(S.children.get(fid, ()))
        seen = set(stack)
        while stack:
            cur = stack.pop()
            implied.add(cur)
            for ch in S.children.get(cur, ()):
                if ch not in seen:
                    seen.add(ch)
                    stack.append(ch)
    cores = {}
    for fid in sorted(skel.face_ids):
        if fid in implied:
            continue
        cores.setdefault(S.face(fid).dim, []).append(fid)
    return cores


def _swap_groups(S, d):
    """(d+1)-faces with their dim-d boundary ids, for swap proposals."""
    groups = []
    for gid in S.faces_of_dim(d + 1):
        bd = sorted(ch for ch in S.children[gid] if S.face(ch).dim == d)
        if bd:
            groups.append((gid, tuple(bd)))
    return groups


def _interior_faces(S):
    out = {}
    for fid in S.faces_of_dim(S.k - 1):
        owners = S.cells_of_face(fid)
        if len(owners) == 2:
            out[fid] = tuple(owners)
    return out


def optimize(S, init: Skeleton, oracle: ConstraintOracle, h: DensityField,
             config: OptimizerConfig) -> OptimizationOutcome:
    """Minimize J over admissible skeletons containing the frozen faces.

    Exhaustive mode enumerates every subset of the candidate pool when that
    pool is small enough; local mode runs strict steepest-descent passes of
    removals, collapses and swap moves from seeded restarts.
    """
    d = config.d
    if not admissible(S, init, oracle, d):
        raise InitInadmissible("initial skeleton rejected by the oracle")
    pool = config.candidate_pool
    if pool is None:
        pool = tuple(sorted(S.faces_of_dim(d)))
    pool = tuple(sorted(set(pool)))
    frozen = init.frozen_ids
    free = tuple(f for f in pool if f not in frozen)
    base = frozenset(init.face_ids - set(free))
    weights = face_weights(S, set(pool) | set(init.face_ids), h, d)

    def value(faces):
        return sum(weights.get(f, 0.0) for f in faces if S.face(f).dim == d)

    mode = config.mode
    if mode == "auto":
        mode = "exhaustive" if len(free) <= config.exhaustive_cap else "local"
    log = []

    if mode == "exhaustive":
        best = _optimize_exhaustive(S, base, free, oracle, d, weights, init, log)
        cert = "exhaustive"
    else:
        best = _optimize_local(S, init, oracle, d, weights, free, config, log, value)
        cert = "local"

    best = _lower_core_pass(S, best, oracle, h, d, log)
    if not admissible(S, best, oracle, d):
        raise InitInadmissible("optimizer produced an inadmissible skeleton")
    cores = core_decompose(S, best)
    return OptimizationOutcome(best, skeleton_value(S, best, h, d), cores,
                               log if config.keep_log else [], cert)


def _optimize_exhaustive(S, base, free, oracle, d, weights, init, log):
    m = len(free)
    if oracle.kind == "chain":
        return _exhaustive_chain(S, base, free, oracle, weights, init, d)
    # vectorized subset values, then scan candidates value-ascending: the
    # first admissible subset is a true minimum
    masks = np.arange(1 << m, dtype=np.uint32)
    vals = np.zeros(1 << m)
    for i, f in enumerate(free):
        vals += np.where((masks >> i) & 1, weights.get(f, 0.0), 0.0)
    order = np.lexsort((masks, np.round(vals, 12)))
    best_faces, best_val = None, math.inf
    for idx in order:
        val = float(vals[idx])
        if best_faces is not None and val > best_val + 1e-12:
            break
        mask = int(masks[idx])
        faces = set(base)
        for i in range(m):
            if mask & (1 << i):
                faces.add(free[i])
        key = tuple(sorted(faces))
        if best_faces is not None and not (val < best_val - 1e-12 or key < best_faces):
            continue
        if admissible(S, Skeleton(frozenset(faces), init.frozen_ids), oracle, d):
            best_faces, best_val = key, val
    if best_faces is None:
        raise InitInadmissible("no admissible skeleton in the candidate pool")
    return Skeleton(frozenset(best_faces), init.frozen_ids)


def _exhaustive_chain(S, base, free, oracle, weights, init, d):
    target = 0
    frame_index = {}
    for fid in sorted(oracle.frame):
        frame_index.setdefault(fid, len(frame_index))
        target |= 1 << frame_index[fid]
    for fid in base:
        if S.face(fid).dim == d:
            for ch in S.children[fid]:
                frame_index.setdefault(ch, len(frame_index))
    masks = []
    for f in free:
        mk = 0
        for ch in S.children[f]:
            frame_index.setdefault(ch, len(frame_index))
            mk ^= 1 << frame_index[ch]
        masks.append(mk)
    base_mask = 0
    for fid in base:
        if S.face(fid).dim == d:
            for ch in S.children[fid]:
                base_mask ^= 1 << frame_index[ch]
    warr = [weights.get(f, 0.0) for f in free]
    m = len(free)
    best_val, best_mask = math.inf, None
    # gray-code sweep keeps the xor and the value incremental
    cur_mask, cur_val, cur_x = 0, 0.0, base_mask
    prev_gray = 0
    if cur_x == target:
        best_val, best_mask = cur_val, 0
    for i in range(1, 1 << m):
        gray = i ^ (i >> 1)
        bit = (gray ^ prev_gray).bit_length() - 1
        prev_gray = gray
        if gray & (1 << bit):
            cur_val += warr[bit]
        else:
            cur_val -= warr[bit]
        cur_x ^= masks[bit]
        if cur_x == target and cur_val < best_val - 1e-15:
            best_val, best_mask = cur_val, gray
    if best_mask is None:
        raise InitInadmissible("no admissible chain in the candidate pool")
    faces = set(base)
    for i in range(m):
        if best_mask & (1 << i):
            faces.add(free[i])
    return Skeleton(frozenset(faces), init.frozen_ids)


class _MoveContext:
    """Precomputed structures shared by all descent passes of one optimize()."""

    def __init__(self, S, oracle, d, weights, frozen, anchor):
        self.S = S
        self.oracle = oracle
        self.d = d
        self.weights = weights
        self.frozen = frozen
        self.swap_groups = _swap_groups(S, d)
        self.interior = _interior_faces(S) if oracle.kind == "separation" else {}
        self.regions = []
        if self.interior:
            adj = {}
            for fid, (a, b) in self.interior.items():
                adj.setdefault(a, set()).add(b)
                adj.setdefault(b, set()).add(a)
            self.cell_adj = adj
            self.regions = [(c,) for c in S.cells]
            for a in S.cells:
                for b in sorted(adj.get(a, ())):
                    if a < b:
                        self.regions.append((a, b))
            self.region_faces = []
            for reg in self.regions:
                rset = set(reg)
                toggled = frozenset(fid for fid, (a, b) in self.interior.items()
                                    if (a in rset) != (b in rset))
                self.region_faces.append(toggled)
        # anchor potential breaks plateau ties (drift toward constraint data)
        self.phi = {}
        for fid in S.faces_of_dim(d):
            mid = S.face(fid).poly.interior_point()
            self.phi[fid] = float(((mid - anchor) ** 2).sum())
        # shared-vertex adjacency index for fast connectivity checks
        if oracle.kind == "connectivity":
            self.vert_index = {}
            for fid in list(S.faces_of_dim(d)) + [f.id for f in S.faces if f.dim < d]:
                for key in S.face(fid).vkeys:
                    self.vert_index.setdefault(key, []).append(fid)

    def ok(self, faces):
        if self.oracle.kind == "connectivity":
            terms = self.oracle.terminals
            if not set(terms) <= faces:
                return False
            seen = {terms[0]}
            stack = [terms[0]]
            targets = set(terms[1:])
            while stack and targets:
                cur = stack.pop()
                for key in self.S.face(cur).vkeys:
                    for nb in self.vert_index.get(key, ()):
                        if nb in faces and nb not in seen:
                            seen.add(nb)
                            targets.discard(nb)
                            stack.append(nb)
            return not targets
        return admissible(self.S, Skeleton(frozenset(faces), self.frozen),
                          self.oracle, self.d)

    def dj(self, added, removed):
        w = self.weights
        return sum(w.get(x, 0.0) for x in added) - sum(w.get(x, 0.0) for x in removed)

    def dphi(self, added, removed):
        p = self.phi
        return sum(p.get(x, 0.0) for x in added) - sum(p.get(x, 0.0) for x in removed)


_MOVE_RANK = {"remove": 0, "collapse": 1, "swap": 2, "flip": 3}


def _symbolic_moves(ctx, faces):
    """(dj, dphi, rank, key, added, removed) tuples; sets stay small."""
    S, d, frozen = ctx.S, ctx.d, ctx.frozen
    out = []
    for f in faces:
        if f in frozen:
            continue
        removed = (f,)
        out.append((ctx.dj((), removed), ctx.dphi((), removed),
                    0, f, (), removed))
        if S.face(f).dim == d and S.children.get(f):
            added = tuple(ch for ch in sorted(S.children[f]) if ch not in faces)
            out.append((ctx.dj((), removed), ctx.dphi((), removed),
                        1, f, added, removed))
    for gid, bd in ctx.swap_groups:
        cur_local = [x for x in bd if x in faces]
        if not cur_local:
            continue
        m = len(bd)
        cur_mask = sum(1 << i for i, x in enumerate(bd) if x in faces)
        for mask in range(1 << m):
            if mask == cur_mask:
                continue
            added = tuple(bd[i] for i in range(m)
                          if mask & (1 << i) and not (cur_mask & (1 << i)))
            removed = tuple(bd[i] for i in range(m)
                            if cur_mask & (1 << i) and not (mask & (1 << i)))
            if any(x in frozen for x in removed):
                continue
            out.append((ctx.dj(added, removed), ctx.dphi(added, removed),
                        2, gid, added, removed))
    for reg, toggled in zip(ctx.regions, getattr(ctx, "region_faces", ())):
        if any(x in frozen for x in toggled):
            continue
        added = tuple(x for x in toggled if x not in faces)
        removed = tuple(x for x in toggled if x in faces)
        if not added and not removed:
            continue
        out.append((ctx.dj(added, removed), ctx.dphi(added, removed),
                    3, reg[0], added, removed))
    return out


def _removal_sweep(ctx, faces, log, it):
    """Repeated passes of single-face removals, most expensive first."""
    changed = True
    while changed:
        changed = False
        order = sorted((f for f in faces if f not in ctx.frozen),
                       key=lambda f: (-ctx.weights.get(f, 0.0), f))
        for f in order:
            if ctx.weights.get(f, 0.0) <= 1e-12 and ctx.S.face(f).dim == ctx.d:
                continue  # zero-measure d-faces are value-neutral
            if ctx.S.face(f).dim != ctx.d:
                continue
            faces.discard(f)
            if ctx.ok(faces):
                log.append(MoveRow(it[0], "remove", f, -ctx.weights.get(f, 0.0), True))
                it[0] += 1
                changed = True
            else:
                faces.add(f)
    return faces


def _descend(ctx, skel, log, it_counter=None):
    """Strict descent on (J, anchor potential): removal sweeps alternate with
    the best admissible collapse/swap/flip move; plateau moves are accepted
    only when they strictly lower the anchor potential."""
    faces = set(skel.face_ids)
    it = it_counter if it_counter is not None else [0]
    while True:
        _removal_sweep(ctx, faces, log, it)
        moves = _symbolic_moves(ctx, frozenset(faces))
        moves.sort(key=lambda m: (m[0], m[1], m[2], m[3]))
        accepted = False
        for dj, dphi, rank, key, added, removed in moves:
            if dj > 1e-12:
                break
            if dj > -1e-12 and dphi > -1e-12:
                continue  # plateau move must strictly improve the anchor
            for x in removed:
                faces.discard(x)
            faces.update(added)
            if ctx.ok(faces):
                log.append(MoveRow(it[0], ("remove", "collapse", "swap", "flip")[rank],
                                   key, dj, True))
                it[0] += 1
                accepted = True
                break
            faces.difference_update(added)
            faces.update(removed)
        if not accepted:
            return Skeleton(frozenset(faces), ctx.frozen)


def _optimize_local(S, init, oracle, d, weights, free, config, log, value):
    rng = np.random.default_rng(config.seed)
    anchor = _anchor_point(S, init, oracle)
    ctx = _MoveContext(S, oracle, d, weights, init.frozen_ids, anchor)
    it = [0]
    best = _descend(ctx, init, log, it)
    best_val = value(best.face_ids)
    for r in range(config.restarts):
        start = None
        if oracle.kind == "separation":
            start = _blob_cut_start(S, oracle, ctx.interior, init, rng)
        elif oracle.kind in ("connectivity", "periodic_cycle"):
            # bounded random superset keeps each restart descent cheap
            p = min(0.5, 64.0 / max(len(free), 1))
            extra = [f for f in free if rng.uniform() < p]
            cand = Skeleton(frozenset(set(best.face_ids) | set(extra)), init.frozen_ids)
            start = cand if admissible(S, cand, oracle, d) else None
        if start is None:
            start = _random_kick(ctx, best, rng)
        cand = _descend(ctx, start, log, it)
        v = value(cand.face_ids)
        if v < best_val - 1e-12 or (abs(v - best_val) <= 1e-12 and
                                    tuple(sorted(cand.face_ids)) < tuple(sorted(best.face_ids))):
            best, best_val = cand, v
    return best


def _anchor_point(S, init, oracle):
    pts = []
    if oracle.kind == "connectivity":
        for t in oracle.terminals:
            pts.append(S.face(t).poly.interior_point())
    elif oracle.kind == "separation":
        for a, b in oracle.pairs:
            pts.append(S.face(a).poly.interior_point())
            pts.append(S.face(b).poly.interior_point())
    elif init.frozen_ids:
        for f in sorted(init.frozen_ids):
            pts.append(S.face(f).poly.interior_point())
    if not pts:
        pts = [S.face(c).poly.interior_point() for c in S.cells]
    return np.mean(pts, axis=0)


def _blob_cut_start(S, oracle, interior, init, rng):
    """Cut induced by a random connected cell blob around one terminal."""
    if not oracle.pairs:
        return None
    s, t = oracle.pairs[rng.integers(len(oracle.pairs))]
    avoid = {b for _, b in oracle.pairs} | {t}
    adj = {}
    for fid, (a, b) in interior.items():
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    blob = {s}
    frontier = sorted(adj.get(s, ()))
    target = int(rng.integers(1, max(2, len(S.cells) - len(avoid))))
    while len(blob) < target and frontier:
        pick = frontier[rng.integers(len(frontier))]
        frontier.remove(pick)
        if pick in avoid or pick in blob:
            continue
        blob.add(pick)
        for nb in sorted(adj.get(pick, ())):
            if nb not in blob and nb not in frontier:
                frontier.append(nb)
    cut = {fid for fid, (a, b) in interior.items() if (a in blob) != (b in blob)}
    skel = Skeleton(frozenset(cut | set(init.frozen_ids)), init.frozen_ids)
    if admissible(S, skel, oracle, None):
        return skel
    return None


def _random_kick(ctx, init, rng, kicks=4):
    cur = set(init.face_ids)
    for _ in range(kicks):
        moves = _symbolic_moves(ctx, frozenset(cur))
        if not moves:
            break
        idx = rng.permutation(len(moves))[:32]
        for i in idx:
            _, _, _, _, added, removed = moves[int(i)]
            for x in removed:
                cur.discard(x)
            cur.update(added)
            if ctx.ok(cur):
                break
            cur.difference_update(added)
            cur.update(removed)
    return Skeleton(frozenset(cur), init.frozen_ids)


def _lower_core_pass(S, skel, oracle, h, d, log):
    """Greedy removal of lower-core faces that keep admissibility (second
    nested minimization over each core level)."""
    from .simplicial import faces_to_set

    faces = set(skel.face_ids)
    for level in range(d - 1, -1, -1):
        changed = True
        while changed:
            changed = False
            cores = core_decompose(S, Skeleton(frozenset(faces), skel.frozen_ids))
            for fid in list(cores.get(level, ())):
                if fid in skel.frozen_ids:
                    continue
                cand = Skeleton(frozenset(faces - {fid}), skel.frozen_ids)
                if admissible(S, cand, oracle, d):
                    faces.discard(fid)
                    log.append(MoveRow(-1, f"core{level}-remove", fid, 0.0, True))
                    changed = True
    return Skeleton(frozenset(faces), skel.frozen_ids)


# -- quasiminimality probe ----------------------------------------------------


@dataclass
class ProbeRow:
    kind: str
    face: int
    ratio: float
    admissible_image: bool


@dataclass
class ProbeReport:
    max_ratio: float
    rows: list
    trials: int
    effective: int


def quasiminimality_probe(S, skel: Skeleton, oracle: ConstraintOracle, d,
                          trials, seed=0) -> ProbeReport:
    """Random local collapse/slide deformations; reports max of
    H^d(E & moved) / H^d(image of the moved part), skipping 0/0."""
    rng = np.random.default_rng(seed)
    rows = []
    if trials <= 0:
        return ProbeReport(0.0, rows, 0, 0)
    swap_groups = _swap_groups(S, d)
    faces = skel.face_ids
    dfaces = sorted(f for f in faces if S.face(f).dim == d and f not in skel.frozen_ids)
    max_ratio = 0.0
    effective = 0
    for _ in range(trials):
        if not dfaces:
            break
        kind = "slide" if rng.uniform() < 0.5 else "retract"
        if kind == "slide" and swap_groups:
            gid, bd = swap_groups[rng.integers(len(swap_groups))]
            local = [x for x in bd if x in faces and x not in skel.frozen_ids]
            if not local:
                continue
            alpha = local[rng.integers(len(local))]
            rest = [x for x in bd if x != alpha]
            newf = (set(faces) - {alpha}) | set(rest)
            image = Skeleton(frozenset(newf), skel.frozen_ids)
            ok = admissible(S, image, oracle, d)
            num = S.face(alpha).poly.measure()
            den = sum(S.face(x).poly.measure() for x in rest)
            if not ok:
                rows.append(ProbeRow(kind, alpha, math.nan, False))
                continue
            effective += 1
            ratio = math.inf if den <= 0 else num / den
            rows.append(ProbeRow(kind, alpha, ratio, True))
            max_ratio = max(max_ratio, ratio)
        else:
            alpha = dfaces[rng.integers(len(dfaces))]
            free_child = None
            for ch in S.children.get(alpha, ()):
                other_parents = [p for p in S.parents.get(ch, ()) if p != alpha and p in faces]
                if not other_parents and ch not in faces:
                    free_child = ch
                    break
            if free_child is None:
                continue
            keep_children = set(S.children[alpha]) - {free_child}
            newf = (set(faces) - {alpha}) | keep_children
            image = Skeleton(frozenset(newf), skel.frozen_ids)
            ok = admissible(S, image, oracle, d)
            num = S.face(alpha).poly.measure()
            if not ok:
                rows.append(ProbeRow("retract", alpha, math.nan, False))
                continue
            if num <= 0:
                continue  # 0/0 skipped
            effective += 1
            rows.append(ProbeRow("retract", alpha, math.inf, True))
            max_ratio = math.inf
    return ProbeReport(max_ratio, rows, trials, effective)
