"""Nested mesh sequences and the hierarchical spline basis.

A level is a mesh plus its global knots plus the parametric domain selected
for that level (a union of parent-element closures).  Subdivision doubles the
positive-area index grid, halving every knot span; the hierarchical basis
keeps coarse functions whose support leaks out of the next level's domain and
adopts fine functions fully inside it.

All domain and support tests are exact rational arithmetic.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .basis import Anchor, GlobalKnots, Space, _march, bspline_eval
from .tmesh import MeshStructureError, TMesh


@dataclass(frozen=True)
class LevelMesh:
    """One hierarchy level.  ``domain`` is a tuple of closed parametric
    rectangles (x1, x2, y1, y2); None means the whole parametric square
    (level 1 only)."""

    level: int
    mesh: TMesh
    hknots: GlobalKnots
    vknots: GlobalKnots
    domain: tuple | None = None

    def space(self):
        return _space_for(self.mesh, self.hknots, self.vknots)


_space_cache = {}


def _space_for(mesh, hknots, vknots):
    key = (mesh.key(), hknots, vknots)
    if key not in _space_cache:
        _space_cache[key] = Space(mesh, hknots, vknots)
    return _space_cache[key]


# -- subdivision --------------------------------------------------------------


def index_map(i, m, p):
    """Parent index line -> child index line under span-halving subdivision."""
    if i <= p + 1:
        return i
    if i >= m - p:
        return i + m - 2 * p - 1
    return 2 * i - p - 1


def refine_knots(knots):
    """Child global knots: parent values on mapped lines, span midpoints between."""
    m, p = knots.m, knots.p
    child = [None] * (2 * m - 2 * p - 1)
    for i in range(1, m + 1):
        child[index_map(i, m, p) - 1] = knots[i]
    for i in range(p + 1, m - p):
        child[2 * i - p - 1] = (knots[i] + knots[i + 1]) / 2
    return GlobalKnots(child, p)


def bezier_cells(mesh, hknots, vknots):
    """Positive-parametric-area cells of the extended mesh, as index rects."""
    ext = mesh.extended()
    return [
        (x1, x2, y1, y2)
        for x1, x2, y1, y2 in ext.cells
        if hknots[x2] > hknots[x1] and vknots[y2] > vknots[y1]
    ]


def subdivide_level(parent: LevelMesh):
    """Split every Bezier element of the parent into four congruent children.

    Returns (child TMesh, child hknots, child vknots, parent extended mesh
    mapped into child index space).  The child is not necessarily
    analysis-suitable yet.
    """
    mesh = parent.mesh
    m, n, p, q = mesh.m, mesh.n, mesh.p, mesh.q
    ext = mesh.extended()
    mc = 2 * m - 2 * p - 1
    nc = 2 * n - 2 * q - 1
    fx = lambda i: index_map(i, m, p)
    fy = lambda j: index_map(j, n, q)
    hseg = np.zeros((mc + 1, nc + 1), dtype=bool)
    vseg = np.zeros((mc + 1, nc + 1), dtype=bool)
    for i in range(1, m):
        for j in range(1, n + 1):
            if ext.hseg[i, j]:
                hseg[fx(i) : fx(i + 1), fy(j)] = True
    for i in range(1, m + 1):
        for j in range(1, n):
            if ext.vseg[i, j]:
                vseg[fx(i), fy(j) : fy(j + 1)] = True
    parent_ext_mapped = TMesh(mc, nc, p, q, hseg.copy(), vseg.copy())
    chk = refine_knots(parent.hknots)
    cvk = refine_knots(parent.vknots)
    for x1, x2, y1, y2 in bezier_cells(mesh, parent.hknots, parent.vknots):
        cx = (fx(x1) + fx(x2)) // 2
        cy = (fy(y1) + fy(y2)) // 2
        if chk[cx] != (parent.hknots[x1] + parent.hknots[x2]) / 2 or cvk[cy] != (
            parent.vknots[y1] + parent.vknots[y2]
        ) / 2:
            raise MeshStructureError(
                f"element {(x1, x2, y1, y2)} has no parametric-midpoint index line; "
                "spans must be index-uniform for congruent subdivision"
            )
        ylo, yhi = fy(y1), fy(y2)
        # continue midlines through the zero-area band when they hit the core edge
        if ylo == q + 1:
            ylo = 1
        if yhi == nc - q:
            yhi = nc
        vseg[cx, ylo:yhi] = True
        xlo, xhi = fx(x1), fx(x2)
        if xlo == p + 1:
            xlo = 1
        if xhi == mc - p:
            xhi = mc
        hseg[xlo:xhi, cy] = True
    child = TMesh(mc, nc, p, q, hseg, vseg)
    return child, chk, cvk, parent_ext_mapped


def make_analysis_suitable(mesh, parent_ext=None):
    """Materialize offending extensions as edges until the mesh is
    analysis-suitable; deterministic (shortest extension first, ties by
    T-junction coordinate)."""
    rounds = 0
    while True:
        ok, bad = mesh.is_analysis_suitable()
        if ok:
            break
        rounds += 1
        if rounds > mesh.m * mesh.n:
            raise MeshStructureError("extension materialization did not reach a fixed point")
        cand = sorted(
            {e for pair in bad for e in pair},
            key=lambda e: (e.length, e.junction.x, e.junction.y, e.axis),
        )
        e = cand[0]
        if e.axis == "h":
            mesh = mesh.with_segments(hsegs=[(i, e.line) for i in range(e.lo, e.hi)])
        else:
            mesh = mesh.with_segments(vsegs=[(e.line, j) for j in range(e.lo, e.hi)])
    if parent_ext is not None and not mesh.extended().includes(parent_ext):
        raise MeshStructureError("refined mesh does not contain the parent extended mesh")
    return mesh


def subdivide_suitable(parent: LevelMesh):
    """Subdivide and restore analysis-suitability; returns a LevelMesh with an
    empty domain at level+1."""
    child, chk, cvk, parent_ext = subdivide_level(parent)
    child = make_analysis_suitable(child, parent_ext)
    bad = child.validate()
    if bad:
        raise MeshStructureError(f"subdivided mesh invalid: {bad[0]}")
    return LevelMesh(parent.level + 1, child, chk, cvk, domain=())


# -- rectangle-union coverage (exact) -----------------------------------------


def rect_covered(rect, rects):
    """Closed rectangle ⊆ union of closed rectangles, exact rationals."""
    x1, x2, y1, y2 = rect
    if x1 >= x2 or y1 >= y2:
        return any(r[0] <= x1 and x2 <= r[1] and r[2] <= y1 and y2 <= r[3] for r in rects)
    xs = sorted({x1, x2} | {v for r in rects for v in r[:2] if x1 < v < x2})
    ys = sorted({y1, y2} | {v for r in rects for v in r[2:] if y1 < v < y2})
    for xa, xb in zip(xs, xs[1:]):
        mx = (xa + xb) / 2
        for ya, yb in zip(ys, ys[1:]):
            my = (ya + yb) / 2
            if not any(r[0] <= mx <= r[1] and r[2] <= my <= r[3] for r in rects):
                return False
    return True


def in_domain(rect, domain):
    if domain is None:
        return True
    return rect_covered(rect, domain)


# -- hierarchical space -------------------------------------------------------


@dataclass(frozen=True)
class HFunction:
    """A hierarchical basis function: a level tag plus its blending function."""

    level: int
    fn: object  # BlendingFunction

    def sort_key(self):
        return (self.level, self.fn.anchor.sort_key())


@dataclass(frozen=True)
class HElement:
    level: int
    index_rect: tuple
    param_rect: tuple  # (s1, s2, t1, t2) Fractions

    def sort_key(self):
        return (self.level, self.index_rect)


class HierarchicalSpace:
    """The hierarchical basis H and element set HE over nested levels."""

    def __init__(self, levels):
        levels = tuple(levels)
        if not levels:
            raise MeshStructureError("hierarchy needs at least one level")
        for a, b in zip(levels, levels[1:]):
            if b.level != a.level + 1:
                raise MeshStructureError("levels must be consecutively numbered")
            if b.domain is None:
                raise MeshStructureError("only level 1 may cover the whole domain")
        self.levels = levels
        self.spaces = [lv.space() for lv in levels]
        self._build()

    def _build(self):
        sp1 = self.spaces[0]
        H = [HFunction(1, f) for f in sp1.functions]
        E = [
            HElement(1, rect, self._param_rect(0, rect))
            for rect in bezier_cells(self.levels[0].mesh, self.levels[0].hknots, self.levels[0].vknots)
        ]
        for k in range(1, len(self.levels)):
            dom = self.levels[k].domain
            for r in dom:
                if not in_domain(r, self.levels[k - 1].domain):
                    raise MeshStructureError(
                        f"level {k + 1} domain rectangle {r} escapes level {k} domain"
                    )
            sp = self.spaces[k]
            keep = [hf for hf in H if not in_domain(self._support(hf), dom)]
            fine = [
                HFunction(k + 1, f)
                for f in sp.functions
                if in_domain(tuple(sp.support(f)), dom)
            ]
            H = keep + fine
            keep_e = [he for he in E if not in_domain(he.param_rect, dom)]
            fine_e = [
                HElement(k + 1, rect, self._param_rect(k, rect))
                for rect in bezier_cells(self.levels[k].mesh, self.levels[k].hknots, self.levels[k].vknots)
                if in_domain(self._param_rect(k, rect), dom)
            ]
            E = keep_e + fine_e
        self.functions = tuple(sorted(H, key=HFunction.sort_key))
        self.elements = tuple(sorted(E, key=HElement.sort_key))
        self.n_f = len(self.functions)
        self.n_e = len(self.elements)

    def _param_rect(self, k, rect):
        x1, x2, y1, y2 = rect
        lv = self.levels[k]
        return (lv.hknots[x1], lv.hknots[x2], lv.vknots[y1], lv.vknots[y2])

    def _support(self, hf):
        return tuple(self.spaces[hf.level - 1].support(hf.fn))

    def support(self, hf):
        return self._support(hf)

    def eval_function(self, hf, s, t):
        return self.spaces[hf.level - 1].eval_function(hf.fn, s, t)

    def eval_all(self, s, t):
        return np.array([self.eval_function(hf, s, t) for hf in self.functions])

    def greville_points(self):
        from .basis import greville

        out = []
        for hf in self.functions:
            sp = self.spaces[hf.level - 1]
            out.append(
                (
                    greville(sp.h_values(hf.fn), sp.mesh.p),
                    greville(sp.v_values(hf.fn), sp.mesh.q),
                )
            )
        return np.array(out)

    def check_element_support(self):
        """Every basis function must be covered by HE element closures."""
        rects = [he.param_rect for he in self.elements]
        for hf in self.functions:
            if not rect_covered(self._support(hf), rects):
                return False
        return True


def build_hierarchy(levels):
    return HierarchicalSpace(levels)


# -- representation of a coarse function on a finer level ---------------------


def insert_knot(vals, p, x):
    """Split a single B-spline local knot vector at x: returns two
    (coefficient, child vector) pairs with N[vals] = c1 N[w1] + c2 N[w2]."""
    v = list(vals)
    w = sorted(v + [x])
    if x >= v[p] or v[p] == v[0]:
        c1 = Fraction(1)
    else:
        c1 = Fraction(x - v[0]) / (v[p] - v[0])
    if x <= v[1]:
        c2 = Fraction(1)
    else:
        c2 = Fraction(v[p + 1] - x) / (v[p + 1] - v[1])
    return (c1, tuple(w[: p + 2])), (c2, tuple(w[1 : p + 3]))


def _values_to_indices(knots, vals):
    """Canonical index lines for a sorted local value vector: repeated domain
    ends hug the core (zeros end at index p+1, ones start at m-p); interior
    values match their unique index line."""
    p, m = knots.p, knots.m
    lo, hi = knots.values[0], knots.values[-1]
    nlo = sum(1 for v in vals if v == lo)
    nhi = sum(1 for v in vals if v == hi)
    idx = list(range(p + 2 - nlo, p + 2))
    inner = [v for v in vals if v != lo and v != hi]
    pos = p + 2
    for v in inner:
        while pos <= m and knots[pos] != v:
            pos += 1
        if pos > m:
            raise MeshStructureError(f"knot value {v} not on the fine knot vector")
        idx.append(pos)
        pos += 1
    idx.extend(range(m - p, m - p + nhi))
    return tuple(idx)


def _anchor_from(hidx, vidx, p, q):
    if p % 2:
        hx1 = hx2 = hidx[(p + 1) // 2]
    else:
        hx1, hx2 = hidx[p // 2], hidx[p // 2 + 1]
    if q % 2:
        vy1 = vy2 = vidx[(q + 1) // 2]
    else:
        vy1, vy2 = vidx[q // 2], vidx[q // 2 + 1]
    return Anchor(hx1, hx2, vy1, vy2)


def _anchor_gap(fine, anchor, hv, vv):
    """A fine index line crossing the open interior of the implied anchor.

    A genuine fine function has a cell/edge/vertex anchor with no spanning
    line strictly inside; a candidate vector that straddles one is missing
    that knot value.  Returns ('h'|'v', value) or None.
    """
    for x in range(anchor.hx1 + 1, anchor.hx2):
        if fine.mesh.v_line_covers(x, anchor.vy1, anchor.vy2):
            val = fine.hknots[x]
            if hv[0] < val < hv[-1]:
                return "h", val
    for y in range(anchor.vy1 + 1, anchor.vy2):
        if fine.mesh.h_line_covers(y, anchor.hx1, anchor.hx2):
            val = fine.vknots[y]
            if vv[0] < val < vv[-1]:
                return "v", val
    return None


def represent_in_space(hvals, vvals, fine: Space, verify=True):
    """Coefficients of one blending function (given by its local knot values)
    over the functions of a finer space, found by repeated single knot
    insertion wherever the fine mesh demands a line the vector lacks."""
    p, q = fine.mesh.p, fine.mesh.q
    table = {(f.h_indices, f.v_indices): f for f in fine.functions}
    out = defaultdict(Fraction)
    queue = [(Fraction(1), tuple(Fraction(v) for v in hvals), tuple(Fraction(v) for v in vvals))]
    guard = 0
    while queue:
        guard += 1
        if guard > 100000:
            raise MeshStructureError("representation did not terminate")
        c, hv, vv = queue.pop()
        if c == 0 or hv[0] == hv[-1] or vv[0] == vv[-1]:
            continue
        hidx = _values_to_indices(fine.hknots, hv)
        vidx = _values_to_indices(fine.vknots, vv)
        anchor = _anchor_from(hidx, vidx, p, q)
        gap = _anchor_gap(fine, anchor, hv, vv)
        if gap is not None:
            axis, x = gap
            if axis == "h":
                for cc, child in insert_knot(hv, p, x):
                    queue.append((c * cc, child, vv))
            else:
                for cc, child in insert_knot(vv, q, x):
                    queue.append((c * cc, hv, child))
            continue
        mh = _march(fine.mesh, anchor, horizontal=True)
        mv = _march(fine.mesh, anchor, horizontal=False)
        mhv = fine.hknots.take(mh)
        mvv = fine.vknots.take(mv)
        if Counter(mhv) != Counter(hv):
            x = _missing_value(mhv, hv)
            for cc, child in insert_knot(hv, p, x):
                queue.append((c * cc, child, vv))
        elif Counter(mvv) != Counter(vv):
            x = _missing_value(mvv, vv)
            for cc, child in insert_knot(vv, q, x):
                queue.append((c * cc, hv, child))
        else:
            key = (mh, mv)
            if key not in table:
                raise MeshStructureError(f"no fine function with index vectors {key}")
            out[table[key]] += c
    result = {f: c for f, c in out.items() if c != 0}
    if verify:
        _verify_representation(hvals, vvals, p, q, fine, result)
    return result


def _missing_value(marched_vals, vals):
    diff = Counter(marched_vals) - Counter(vals)
    for v in sorted(diff):
        if vals[0] < v < vals[-1]:
            return v
    raise MeshStructureError(
        f"fine index vector {marched_vals} incompatible with coarse vector {vals}"
    )


def _verify_representation(hvals, vvals, p, q, fine, coeffs, tol=1e-10, samples=20):
    rng = np.random.default_rng(12345)
    pts = rng.random((samples, 2))
    for s, t in pts:
        ref = bspline_eval(hvals, p, s) * bspline_eval(vvals, q, t)
        got = sum(float(c) * fine.eval_function(f, s, t) for f, c in coeffs.items())
        if abs(ref - got) > tol:
            raise MeshStructureError(
                f"nesting violated: representation residual {abs(ref - got):.3e} at ({s}, {t})"
            )


def represent_coarse_in_fine(space: HierarchicalSpace, hf: HFunction, fine_level: int):
    """Representation of one hierarchical function over the basis of a finer
    level's full spline space; returns {BlendingFunction: Fraction}."""
    sp = space.spaces[hf.level - 1]
    fine = space.spaces[fine_level - 1]
    return represent_in_space(sp.h_values(hf.fn), sp.v_values(hf.fn), fine)


# -- element-driven refinement ------------------------------------------------


def refine_by_elements(space: HierarchicalSpace, marked, max_levels=8):
    """Grow the next-level domains by the closures of the marked elements and
    rebuild; creates deeper levels lazily."""
    marked = list(marked)
    have = set(space.elements)
    for el in marked:
        if el not in have:
            raise MeshStructureError(f"marked element {el} is not in HE")
    if not marked:
        return space
    levels = list(space.levels)
    additions = defaultdict(list)
    for el in marked:
        additions[el.level + 1].append(el.param_rect)
    for tgt in sorted(additions):
        if tgt > max_levels:
            raise MeshStructureError(f"refinement would exceed the level cap {max_levels}")
        if tgt > len(levels):
            levels.append(subdivide_suitable(levels[-1]))
        lv = levels[tgt - 1]
        new_rects = tuple(lv.domain) + tuple(
            r for r in additions[tgt] if not in_domain(r, lv.domain)
        )
        levels[tgt - 1] = replace(lv, domain=new_rects)
    return HierarchicalSpace(levels)
