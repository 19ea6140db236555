"""T-mesh topology in the integer index domain.

A T-mesh partitions the index rectangle [1,m] x [1,n] into open axis-aligned
cells.  Interior vertices have valence 3 (T-junctions) or 4.  All geometric
predicates here (extensions, intersections, inclusion) are exact integer
arithmetic; no floating point enters the topology layer.

The skeleton is stored as two boolean arrays of unit segments.  Cells,
canonical vertices, and T-junctions are derived lazily and cached.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

MISSING_LEFT = "missing-left"
MISSING_RIGHT = "missing-right"
MISSING_UP = "missing-up"
MISSING_DOWN = "missing-down"


class MeshStructureError(Exception):
    """Structurally unreadable mesh input (distinct from a validation finding)."""


@dataclass(frozen=True)
class Violation:
    kind: str
    where: tuple
    detail: str = ""

    def __str__(self):
        return f"{self.kind} at {self.where}: {self.detail}"


@dataclass(frozen=True)
class RegionSplit:
    """Active region [x1,x2] x [y1,y2]; frame region is the closed complement."""

    x1: int
    x2: int
    y1: int
    y2: int

    def contains(self, x, y):
        return self.x1 <= x <= self.x2 and self.y1 <= y <= self.y2

    def contains_rect(self, xa, xb, ya, yb):
        return self.x1 <= xa and xb <= self.x2 and self.y1 <= ya and yb <= self.y2

    def strictly_outside(self, x, y):
        """True if (x, y) lies in the open frame region (not on the AR boundary)."""
        return not self.contains(x, y)


@dataclass(frozen=True)
class TJunction:
    x: int
    y: int
    missing: str

    @property
    def horizontal(self):
        """A T-junction whose absent edge (and hence extension) is horizontal."""
        return self.missing in (MISSING_LEFT, MISSING_RIGHT)


@dataclass(frozen=True)
class Extension:
    """Face + edge extension of one T-junction, as closed integer segments.

    ``line`` is the fixed coordinate; the face segment is [face_lo, face_hi]
    and the edge segment [edge_lo, edge_hi] along the free axis.  ``axis`` is
    'h' for horizontal segments (fixed y) and 'v' for vertical ones.
    """

    junction: TJunction
    axis: str
    line: int
    face_lo: int
    face_hi: int
    edge_lo: int
    edge_hi: int

    @property
    def lo(self):
        return min(self.face_lo, self.edge_lo)

    @property
    def hi(self):
        return max(self.face_hi, self.edge_hi)

    @property
    def length(self):
        return self.hi - self.lo

    def intersects(self, other):
        """Closed-segment intersection between one horizontal and one vertical extension."""
        if self.axis == other.axis:
            return False
        h, v = (self, other) if self.axis == "h" else (other, self)
        return h.lo <= v.line <= h.hi and v.lo <= h.line <= v.hi


class TMesh:
    """Immutable T-mesh over the index domain [1,m] x [1,n] with degrees (p,q).

    hseg[i, j] is the unit segment [i,i+1] x {j}; vseg[i, j] is {i} x [j,j+1].
    Arrays are 1-indexed with shape (m+1, n+1); out-of-range slots stay False.
    """

    def __init__(self, m, n, p, q, hseg, vseg, declared_vertices=None):
        if p < 1 or q < 1:
            raise MeshStructureError(f"degrees must be >= 1, got p={p}, q={q}")
        if m < p + 2 or n < q + 2:
            raise MeshStructureError(
                f"index domain {m}x{n} too small for degrees ({p},{q})"
            )
        self.m, self.n, self.p, self.q = m, n, p, q
        hseg = np.asarray(hseg, dtype=bool)
        vseg = np.asarray(vseg, dtype=bool)
        if hseg.shape != (m + 1, n + 1) or vseg.shape != (m + 1, n + 1):
            raise MeshStructureError("segment array shape mismatch")
        if hseg[0, :].any() or hseg[m:, :].any() or hseg[:, 0].any():
            raise MeshStructureError("horizontal segment out of index range")
        if vseg[0, :].any() or vseg[:, 0].any() or vseg[:, n:].any():
            raise MeshStructureError("vertical segment out of index range")
        hseg.flags.writeable = False
        vseg.flags.writeable = False
        self.hseg = hseg
        self.vseg = vseg
        self.declared_vertices = (
            frozenset(declared_vertices) if declared_vertices is not None else None
        )

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_vertices_edges(cls, m, n, p, q, vertices, edges):
        """Build from an explicit vertex list and axis-aligned vertex-pair edges.

        A dangling edge endpoint (not in the vertex list) is a hard error, not
        a validation finding.
        """
        vset = set(map(tuple, vertices))
        for (x, y) in vset:
            if not (1 <= x <= m and 1 <= y <= n):
                raise MeshStructureError(f"vertex {(x, y)} outside index domain")
        hseg = np.zeros((m + 1, n + 1), dtype=bool)
        vseg = np.zeros((m + 1, n + 1), dtype=bool)
        for a, b in edges:
            a, b = tuple(a), tuple(b)
            if a not in vset or b not in vset:
                raise MeshStructureError(f"edge {(a, b)} has dangling endpoint")
            (xa, ya), (xb, yb) = a, b
            if ya == yb and xa != xb:
                lo, hi = sorted((xa, xb))
                hseg[lo:hi, ya] = True
            elif xa == xb and ya != yb:
                lo, hi = sorted((ya, yb))
                vseg[xa, lo:hi] = True
            else:
                raise MeshStructureError(f"edge {(a, b)} is not axis-aligned")
        return cls(m, n, p, q, hseg, vseg, declared_vertices=vset)

    @classmethod
    def tensor_grid(cls, m, n, p, q):
        hseg = np.zeros((m + 1, n + 1), dtype=bool)
        vseg = np.zeros((m + 1, n + 1), dtype=bool)
        hseg[1:m, 1 : n + 1] = True
        vseg[1 : m + 1, 1:n] = True
        return cls(m, n, p, q, hseg, vseg)

    def with_segments(self, hsegs=(), vsegs=()):
        """New mesh with extra unit segments ((i, j) pairs) added."""
        hseg = self.hseg.copy()
        vseg = self.vseg.copy()
        for i, j in hsegs:
            hseg[i, j] = True
        for i, j in vsegs:
            vseg[i, j] = True
        return TMesh(self.m, self.n, self.p, self.q, hseg, vseg)

    def without_segments(self, hsegs=(), vsegs=()):
        hseg = self.hseg.copy()
        vseg = self.vseg.copy()
        for i, j in hsegs:
            hseg[i, j] = False
        for i, j in vsegs:
            vseg[i, j] = False
        return TMesh(self.m, self.n, self.p, self.q, hseg, vseg)

    # -- identity -------------------------------------------------------------

    def key(self):
        return (self.m, self.n, self.p, self.q, self.hseg.tobytes(), self.vseg.tobytes())

    def __eq__(self, other):
        return isinstance(other, TMesh) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return (
            f"TMesh(m={self.m}, n={self.n}, p={self.p}, q={self.q}, "
            f"{int(self.hseg.sum())} hsegs, {int(self.vseg.sum())} vsegs)"
        )

    # -- elementary queries ---------------------------------------------------

    def directions(self, x, y):
        """(left, right, down, up) incident unit-segment presence at (x, y)."""
        return (
            bool(self.hseg[x - 1, y]) if x >= 2 else False,
            bool(self.hseg[x, y]),
            bool(self.vseg[x, y - 1]) if y >= 2 else False,
            bool(self.vseg[x, y]),
        )

    def valence(self, x, y):
        return sum(self.directions(x, y))

    def is_interior(self, x, y):
        return 1 < x < self.m and 1 < y < self.n

    def v_line_covers(self, x, ylo, yhi):
        """Vertical skeleton at index x covers the closed interval [ylo, yhi]."""
        if ylo == yhi:
            return bool(self.vseg[x, ylo]) or (ylo >= 2 and bool(self.vseg[x, ylo - 1]))
        return bool(self.vseg[x, ylo:yhi].all())

    def h_line_covers(self, y, xlo, xhi):
        if xlo == xhi:
            return bool(self.hseg[xlo, y]) or (xlo >= 2 and bool(self.hseg[xlo - 1, y]))
        return bool(self.hseg[xlo:xhi, y].all())

    def v_touches(self, x, y):
        """Vertical skeleton touches the point (x, y)."""
        return bool(self.vseg[x, y]) or (y >= 2 and bool(self.vseg[x, y - 1]))

    def h_touches(self, x, y):
        return bool(self.hseg[x, y]) or (x >= 2 and bool(self.hseg[x - 1, y]))

    @cached_property
    def canonical_vertices(self):
        """Points where the skeleton branches, crosses, turns, or terminates.

        Straight-through points of a long edge are not vertices.  Domain
        corners always are.
        """
        left = np.zeros((self.m + 1, self.n + 1), dtype=bool)
        left[2:, :] = self.hseg[1:-1, :]
        right = self.hseg
        down = np.zeros((self.m + 1, self.n + 1), dtype=bool)
        down[:, 2:] = self.vseg[:, 1:-1]
        up = self.vseg
        count = (
            left.astype(np.int8) + right.astype(np.int8)
            + down.astype(np.int8) + up.astype(np.int8)
        )
        has_h = left | right
        has_v = down | up
        mask = (count >= 3) | (has_h & has_v) | ((count == 2) & ~(left & right) & ~(down & up))
        verts = {(int(x), int(y)) for x, y in zip(*np.nonzero(mask))}
        verts |= {(1, 1), (1, self.n), (self.m, 1), (self.m, self.n)}
        if self.declared_vertices:
            verts |= set(self.declared_vertices)
        return frozenset(verts)

    # -- cells ----------------------------------------------------------------

    @cached_property
    def _cell_labels(self):
        """Connected-component labels of the (m-1) x (n-1) unit-cell grid."""
        mu, nu = self.m - 1, self.n - 1
        idx = np.arange(mu * nu).reshape(mu, nu)
        rows, cols = [], []
        # unit cell (i, j) <-> grid slot [i-1, j-1]
        open_right = ~self.vseg[2 : self.m, 1 : self.n]          # (mu-1, nu)
        open_up = ~self.hseg[1 : self.m, 2 : self.n]             # (mu, nu-1)
        r = np.nonzero(open_right)
        rows.append(idx[:-1, :][r])
        cols.append(idx[1:, :][r])
        u = np.nonzero(open_up)
        rows.append(idx[:, :-1][u])
        cols.append(idx[:, 1:][u])
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        graph = coo_matrix(
            (np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(mu * nu, mu * nu)
        )
        ncomp, labels = connected_components(graph, directed=False)
        return ncomp, labels.reshape(mu, nu)

    @cached_property
    def cells(self):
        """Cells as (x1, x2, y1, y2) open rectangles, sorted; components that
        fail to be rectangles are reported by validate(), not here."""
        ncomp, labels = self._cell_labels
        out = []
        for c in range(ncomp):
            xs, ys = np.nonzero(labels == c)
            x1, x2 = int(xs.min()) + 1, int(xs.max()) + 2
            y1, y2 = int(ys.min()) + 1, int(ys.max()) + 2
            out.append((x1, x2, y1, y2))
        out.sort()
        return out

    def cell_components_rectangular(self):
        ncomp, labels = self._cell_labels
        bad = []
        for c in range(ncomp):
            xs, ys = np.nonzero(labels == c)
            if (xs.max() - xs.min() + 1) * (ys.max() - ys.min() + 1) != len(xs):
                bad.append((int(xs.min()) + 1, int(ys.min()) + 1))
        return bad

    # -- regions --------------------------------------------------------------

    def region_split(self):
        dp = (self.p + 1) // 2
        dq = (self.q + 1) // 2
        rs = RegionSplit(1 + dp, self.m - dp, 1 + dq, self.n - dq)
        if rs.x1 > rs.x2 or rs.y1 > rs.y2:
            raise MeshStructureError(
                f"active region empty for m={self.m}, n={self.n}, p={self.p}, q={self.q}"
            )
        return rs

    # -- validation -----------------------------------------------------------

    def validate(self):
        """Full invariant check; returns a list of violations (empty = valid)."""
        report = []
        # domain boundary must be complete edges
        if not (self.hseg[1 : self.m, 1].all() and self.hseg[1 : self.m, self.n].all()):
            report.append(Violation("boundary", (0, 0), "incomplete horizontal boundary"))
        if not (self.vseg[1, 1 : self.n].all() and self.vseg[self.m, 1 : self.n].all()):
            report.append(Violation("boundary", (0, 0), "incomplete vertical boundary"))
        # cells must be rectangles
        for where in self.cell_components_rectangular():
            report.append(Violation("non-rectangular-cell", where, "cell component is not a rectangle"))
        # interior vertex valence
        for (x, y) in sorted(self.canonical_vertices):
            if not self.is_interior(x, y):
                continue
            v = self.valence(x, y)
            if v not in (3, 4):
                report.append(Violation("valence", (x, y), f"interior vertex has valence {v}"))
        # declared vertices must lie on the skeleton
        if self.declared_vertices:
            for (x, y) in sorted(self.declared_vertices):
                if self.valence(x, y) == 0:
                    report.append(Violation("off-skeleton-vertex", (x, y), "declared vertex not on any edge"))
        # admissibility: no T-junction strictly inside the frame region, and
        # the frame-region skeleton is a full tensor-product grid
        try:
            rs = self.region_split()
        except MeshStructureError as exc:
            report.append(Violation("region", (0, 0), str(exc)))
            return report
        for tj in self.t_junctions():
            if rs.strictly_outside(tj.x, tj.y):
                report.append(Violation("frame-t-junction", (tj.x, tj.y), "T-junction inside frame region"))
        report.extend(self._check_frame_grid(rs))
        # exact area accounting
        area = sum((x2 - x1) * (y2 - y1) for x1, x2, y1, y2 in self.cells)
        if area != (self.m - 1) * (self.n - 1):
            report.append(Violation("area", (0, 0), f"cell areas sum to {area}, expected {(self.m - 1) * (self.n - 1)}"))
        return report

    def _check_frame_grid(self, rs):
        """The repeated-knot boundary lines must be complete: the first and
        last p+1 vertical index lines span the full height, and the first and
        last q+1 horizontal lines the full width.  Together with the
        no-T-junction-in-FR rule this is the admissibility restriction we
        enforce; local-knot marching can then never run out of lines."""
        out = []
        zero_v = list(range(1, self.p + 2)) + list(range(self.m - self.p, self.m + 1))
        for i in zero_v:
            if not self.vseg[i, 1 : self.n].all():
                out.append(Violation("frame-grid", (i, 0), "incomplete repeated-knot vertical line"))
        zero_h = list(range(1, self.q + 2)) + list(range(self.n - self.q, self.n + 1))
        for j in zero_h:
            if not self.hseg[1 : self.m, j].all():
                out.append(Violation("frame-grid", (0, j), "incomplete repeated-knot horizontal line"))
        return out

    # -- T-junctions and extensions -------------------------------------------

    def t_junctions(self):
        out = []
        for (x, y) in sorted(self.canonical_vertices):
            if not self.is_interior(x, y):
                continue
            left, right, down, up = self.directions(x, y)
            if left + right + down + up != 3:
                continue
            if not left:
                out.append(TJunction(x, y, MISSING_LEFT))
            elif not right:
                out.append(TJunction(x, y, MISSING_RIGHT))
            elif not down:
                out.append(TJunction(x, y, MISSING_DOWN))
            else:
                out.append(TJunction(x, y, MISSING_UP))
        return out

    def _trace(self, x, y, axis, step, count):
        """Walk from (x, y) along ``axis`` in direction ``step`` until ``count``
        perpendicular edges or vertices are met; clip at the domain boundary."""
        pos = x if axis == "h" else y
        limit = (1, self.m) if axis == "h" else (1, self.n)
        met = 0
        while met < count:
            pos += step
            if pos < limit[0]:
                pos = limit[0]
                break
            if pos > limit[1]:
                pos = limit[1]
                break
            if axis == "h":
                hit = self.v_touches(pos, y) or (pos, y) in self.canonical_vertices
            else:
                hit = self.h_touches(x, pos) or (x, pos) in self.canonical_vertices
            if hit:
                met += 1
        return pos

    def extension(self, tj):
        if tj.horizontal:
            axis, deg, origin = "h", self.p, tj.x
            sign = 1 if tj.missing == MISSING_RIGHT else -1
        else:
            axis, deg, origin = "v", self.q, tj.y
            sign = 1 if tj.missing == MISSING_UP else -1
        face_end = self._trace(tj.x, tj.y, axis, sign, (deg + 1) // 2)
        edge_end = self._trace(tj.x, tj.y, axis, -sign, (deg - 1 + 1) // 2)  # ceil((deg-1)/2)
        face_lo, face_hi = sorted((origin, face_end))
        edge_lo, edge_hi = sorted((origin, edge_end))
        line = tj.y if axis == "h" else tj.x
        return Extension(tj, axis, line, face_lo, face_hi, edge_lo, edge_hi)

    def extensions(self):
        return [self.extension(tj) for tj in self.t_junctions()]

    def is_analysis_suitable(self):
        """(bool, offending (horizontal, vertical) extension pairs)."""
        exts = self.extensions()
        hs = [e for e in exts if e.axis == "h"]
        vs = [e for e in exts if e.axis == "v"]
        bad = [(h, v) for h in hs for v in vs if h.intersects(v)]
        return (not bad, bad)

    def extended(self):
        """The extended T-mesh: all extension segments materialized as edges."""
        hseg = self.hseg.copy()
        vseg = self.vseg.copy()
        for e in self.extensions():
            if e.axis == "h":
                hseg[e.lo : e.hi, e.line] = True
            else:
                vseg[e.line, e.lo : e.hi] = True
        return TMesh(self.m, self.n, self.p, self.q, hseg, vseg)

    def includes(self, other):
        """True if every segment of ``other`` is present in this mesh (same
        index convention; degrees must agree)."""
        if (self.p, self.q) != (other.p, other.q):
            raise MeshStructureError("meshes have incompatible degrees")
        if (self.m, self.n) != (other.m, other.n):
            raise MeshStructureError("meshes have different index domains; map first")
        return bool(
            (other.hseg & ~self.hseg).sum() == 0 and (other.vseg & ~self.vseg).sum() == 0
        )


def validate(mesh):
    return mesh.validate()


def region_split(mesh):
    return mesh.region_split()


def find_t_junctions(mesh):
    return mesh.t_junctions()


def compute_extensions(mesh):
    return mesh.extensions()


def is_analysis_suitable(mesh):
    return mesh.is_analysis_suitable()


def extended_tmesh(mesh):
    return mesh.extended()


def mesh_inclusion(coarse, fine):
    return fine.includes(coarse)
