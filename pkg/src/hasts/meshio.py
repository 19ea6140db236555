"""Text serialization for T-meshes, knot vectors, and hierarchies.

The mesh format is line-oriented: a header with m n p q, the two global knot
vectors as decimal text (shortest binary64 round-trip, so save/load is
bit-exact at the file level), the canonical vertex list, and the minimal edge
list as vertex index pairs.  Hierarchies add per-level domain rectangles as
exact rationals.
"""

from __future__ import annotations

from fractions import Fraction

from .basis import GlobalKnots
from .tmesh import MeshStructureError, TMesh

MESH_MAGIC = "hasts-tmesh 1"
HIER_MAGIC = "hasts-hierarchy 1"


class ParseError(MeshStructureError):
    """Unreadable input file; carries a line number for diagnostics."""

    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


def fmt(x):
    """Decimal text for one float at 17 significant digits (lossless)."""
    return repr(float(x))


def _knot_text(values):
    return " ".join(fmt(v) for v in values)


def _parse_knot(tok, line):
    try:
        return Fraction(float(tok))
    except ValueError:
        raise ParseError(line, f"bad knot value {tok!r}") from None


class _Reader:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self):
        while self.pos < len(self.lines):
            raw = self.lines[self.pos]
            self.pos += 1
            s = raw.strip()
            if s and not s.startswith("#"):
                return self.pos, s
        raise ParseError(self.pos, "unexpected end of file")

    def ints(self, count, what):
        ln, s = self.next()
        toks = s.split()
        if len(toks) != count:
            raise ParseError(ln, f"expected {count} integers for {what}, got {len(toks)}")
        try:
            return ln, [int(t) for t in toks]
        except ValueError:
            raise ParseError(ln, f"non-integer token in {what}") from None


def _edges_of(mesh):
    """Minimal edges as canonical-vertex pairs, sorted."""
    from .basis import _minimal_h_edges, _minimal_v_edges

    edges = [((x1, y), (x2, y)) for x1, x2, y in _minimal_h_edges(mesh)]
    edges += [((x, y1), (x, y2)) for x, y1, y2 in _minimal_v_edges(mesh)]
    edges.sort()
    return edges


def dump_mesh(mesh, hknots, vknots):
    out = [MESH_MAGIC, f"{mesh.m} {mesh.n} {mesh.p} {mesh.q}"]
    out.append("hknots " + _knot_text(hknots.values))
    out.append("vknots " + _knot_text(vknots.values))
    verts = sorted(mesh.canonical_vertices)
    out.append(f"vertices {len(verts)}")
    out.extend(f"{x} {y}" for x, y in verts)
    edges = _edges_of(mesh)
    out.append(f"edges {len(edges)}")
    out.extend(f"{a[0]} {a[1]} {b[0]} {b[1]}" for a, b in edges)
    return "\n".join(out) + "\n"


def save_mesh(path, mesh, hknots, vknots):
    with open(path, "w") as f:
        f.write(dump_mesh(mesh, hknots, vknots))


def read_mesh(path):
    with open(path) as f:
        return parse_mesh(f.read())


def parse_mesh(text):
    r = _Reader(text)
    ln, s = r.next()
    if s != MESH_MAGIC:
        raise ParseError(ln, f"bad header {s!r}, expected {MESH_MAGIC!r}")
    _, (m, n, p, q) = r.ints(4, "header")
    mesh_dims_ok = m >= 2 and n >= 2
    if not mesh_dims_ok:
        raise ParseError(ln, f"bad dimensions m={m} n={n}")
    hknots = _read_knots(r, "hknots", m, p)
    vknots = _read_knots(r, "vknots", n, q)
    _, (nv,) = _kw_int(r, "vertices")
    verts = []
    for _ in range(nv):
        _, (x, y) = r.ints(2, "vertex")
        verts.append((x, y))
    _, (ne,) = _kw_int(r, "edges")
    edges = []
    for _ in range(ne):
        _, (x1, y1, x2, y2) = r.ints(4, "edge")
        edges.append(((x1, y1), (x2, y2)))
    mesh = TMesh.from_vertices_edges(m, n, p, q, verts, edges)
    return mesh, hknots, vknots


def _read_knots(r, kw, count, degree):
    ln, s = r.next()
    toks = s.split()
    if not toks or toks[0] != kw:
        raise ParseError(ln, f"expected {kw!r} line")
    if len(toks) - 1 != count:
        raise ParseError(ln, f"expected {count} knots, got {len(toks) - 1}")
    vals = [_parse_knot(t, ln) for t in toks[1:]]
    try:
        return GlobalKnots(vals, degree)
    except MeshStructureError as exc:
        raise ParseError(ln, str(exc)) from None


def _kw_int(r, kw):
    ln, s = r.next()
    toks = s.split()
    if len(toks) != 2 or toks[0] != kw:
        raise ParseError(ln, f"expected '{kw} <count>' line")
    try:
        return ln, [int(toks[1])]
    except ValueError:
        raise ParseError(ln, f"bad count in {kw}") from None


# -- hierarchy serialization --------------------------------------------------


def _frac_text(v):
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


def _parse_frac(tok, ln):
    try:
        if "/" in tok:
            a, b = tok.split("/")
            return Fraction(int(a), int(b))
        return Fraction(int(tok))
    except (ValueError, ZeroDivisionError):
        raise ParseError(ln, f"bad rational {tok!r}") from None


def dump_hierarchy(levels):
    """Serialize a list of LevelMesh records (see hierarchy module)."""
    out = [HIER_MAGIC, f"levels {len(levels)}"]
    for lv in levels:
        out.append(f"level {lv.level}")
        out.append(dump_mesh(lv.mesh, lv.hknots, lv.vknots).rstrip("\n"))
        rects = lv.domain if lv.domain is not None else []
        out.append(f"domain {len(rects)}")
        for x1, x2, y1, y2 in rects:
            out.append(" ".join(_frac_text(v) for v in (x1, x2, y1, y2)))
    return "\n".join(out) + "\n"


def parse_hierarchy(text):
    from .hierarchy import LevelMesh

    r = _Reader(text)
    ln, s = r.next()
    if s != HIER_MAGIC:
        raise ParseError(ln, f"bad header {s!r}, expected {HIER_MAGIC!r}")
    _, (nlev,) = _kw_int(r, "levels")
    levels = []
    for k in range(nlev):
        ln, s = r.next()
        toks = s.split()
        if len(toks) != 2 or toks[0] != "level" or int(toks[1]) != k + 1:
            raise ParseError(ln, f"expected 'level {k + 1}'")
        ln2, s2 = r.next()
        if s2 != MESH_MAGIC:
            raise ParseError(ln2, "expected embedded mesh section")
        _, (m, n, p, q) = r.ints(4, "header")
        hknots = _read_knots(r, "hknots", m, p)
        vknots = _read_knots(r, "vknots", n, q)
        _, (nv,) = _kw_int(r, "vertices")
        verts = [tuple(r.ints(2, "vertex")[1]) for _ in range(nv)]
        _, (ne,) = _kw_int(r, "edges")
        edges = []
        for _ in range(ne):
            _, (x1, y1, x2, y2) = r.ints(4, "edge")
            edges.append(((x1, y1), (x2, y2)))
        mesh = TMesh.from_vertices_edges(m, n, p, q, verts, edges)
        _, (nr,) = _kw_int(r, "domain")
        rects = []
        for _ in range(nr):
            ln3, s3 = r.next()
            toks = s3.split()
            if len(toks) != 4:
                raise ParseError(ln3, "expected 4 rationals for domain rectangle")
            rects.append(tuple(_parse_frac(t, ln3) for t in toks))
        domain = tuple(rects) if k > 0 else None
        levels.append(LevelMesh(k + 1, mesh, hknots, vknots, domain))
    return levels


def save_hierarchy(path, levels):
    with open(path, "w") as f:
        f.write(dump_hierarchy(levels))


def read_hierarchy(path):
    with open(path) as f:
        return parse_hierarchy(f.read())
