"""OFF-format export/import for skeletons and simplicial sets.

Edges are written as 2-index faces (a documented extension of the plain OFF
face list). Vertex order is lexicographic by coordinates, so identical
geometry always serializes to identical bytes.
"""

import numpy as np

from .errors import ParseError
from .simplicial import SimplicialSet
from .tol import vkey


def _gather(obj, complex_=None):
    """(vertices, faces) where faces are tuples of vertex indices."""
    verts = {}
    faces = []

    def vid(p):
        k = vkey(p)
        if k not in verts:
            verts[k] = np.asarray(p, dtype=float)
        return k

    if isinstance(obj, SimplicialSet):
        for s in obj.simplices:
            faces.append(tuple(vid(p) for p in s))
    else:
        # skeleton: iterable of face ids within a complex
        if complex_ is None:
            raise ValueError("exporting a skeleton needs its complex")
        for fid in sorted(obj):
            poly = complex_.face(fid).poly
            if poly.dim == 0:
                faces.append((vid(poly.vertices[0]),))
            elif poly.dim == 1:
                faces.append(tuple(vid(p) for p in poly.vertices[:2]))
            else:
                ring = [poly.vertices[i] for i in poly.hull_order()]
                faces.append(tuple(vid(p) for p in ring))
    keys = sorted(verts)
    index = {k: i for i, k in enumerate(keys)}
    coords = np.array([verts[k] for k in keys]) if keys else np.zeros((0, 3))
    out_faces = sorted(tuple(index[k] for k in f) for f in faces)
    return coords, out_faces


def export_mesh(obj, path, complex_=None):
    """Write a skeleton or simplicial set as OFF (deterministic ordering)."""
    coords, faces = _gather(obj, complex_)
    lines = ["OFF", "# skelmin mesh v1; edges exported as 2-index faces"]
    lines.append(f"{len(coords)} {len(faces)} 0")
    for p in coords:
        lines.append(" ".join(repr(float(c)) for c in p))
    for f in faces:
        lines.append(" ".join([str(len(f))] + [str(i) for i in f]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def import_mesh(path):
    """Read an OFF file back as (vertices, faces-as-index-tuples)."""
    try:
        with open(path) as fh:
            raw = fh.readlines()
    except OSError as e:
        raise ParseError(str(e))
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(raw)
             if ln.strip() and not ln.strip().startswith("#")]
    if not lines or lines[0][1] != "OFF":
        raise ParseError("missing OFF header", line=1)
    if len(lines) < 2:
        raise ParseError("missing count line", line=lines[0][0])
    try:
        nv, nf, _ = (int(t) for t in lines[1][1].split())
    except ValueError:
        raise ParseError("malformed count line", line=lines[1][1] and lines[1][0])
    rows = lines[2:]
    if len(rows) < nv + nf:
        missing = rows[-1][0] if rows else lines[1][0]
        raise ParseError("truncated file", line=missing)
    verts = []
    for ln_no, text in rows[:nv]:
        try:
            verts.append([float(t) for t in text.split()])
        except ValueError:
            raise ParseError("malformed vertex", line=ln_no)
    faces = []
    for ln_no, text in rows[nv : nv + nf]:
        try:
            parts = [int(t) for t in text.split()]
        except ValueError:
            raise ParseError("malformed face", line=ln_no)
        if not parts or len(parts) != parts[0] + 1:
            raise ParseError("face index count mismatch", line=ln_no)
        idx = parts[1:]
        if any(i < 0 or i >= nv for i in idx):
            raise ParseError("face index out of range", line=ln_no)
        faces.append(tuple(idx))
    return np.array(verts) if verts else np.zeros((0, 3)), faces


def import_as_set(path, d=None):
    """Import an OFF file as a simplicial set (triangulating polygon rows)."""
    verts, faces = import_mesh(path)
    simps = []
    dim = d
    for f in faces:
        if len(f) == 2:
            simps.append(verts[list(f)])
            dim = 1 if dim is None else dim
        elif len(f) >= 3:
            ring = verts[list(f)]
            for i in range(1, len(ring) - 1):
                simps.append(np.stack([ring[0], ring[i], ring[i + 1]]))
            dim = 2 if dim is None else dim
    if not simps:
        return SimplicialSet.empty(dim or 1, verts.shape[1] if len(verts) else 2)
    return SimplicialSet(np.array(simps), dim, [{} for _ in simps])


def face_key_set(path):
    """Canonical geometric keys of the faces in an OFF file."""
    verts, faces = import_mesh(path)
    out = set()
    for f in faces:
        out.add(frozenset(vkey(verts[i]) for i in f))
    return out
