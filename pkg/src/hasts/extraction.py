"""Bezier extraction: Bernstein basis on [-1,1], per-element extraction
operators for hierarchical spline bases, element connectivity, weights, and
Bezier control points.

Coefficients are computed by exact rational knot insertion and converted to
floats only in the assembled element arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .hierarchy import HierarchicalSpace, insert_knot
from .tmesh import MeshStructureError

FMT = "%.17g"


def bernstein_eval(p, i, xi):
    """B_{i,p}(xi) on [-1,1], 1 <= i <= p+1."""
    if not 1 <= i <= p + 1:
        raise ValueError(f"Bernstein index {i} out of range for degree {p}")
    return comb(p, i - 1) * (1 - xi) ** (p - i + 1) * (1 + xi) ** (i - 1) / 2**p


def bernstein_deriv(p, i, xi, order=1):
    """d^order/dxi^order of B_{i,p} on [-1,1]."""
    if order == 0:
        return bernstein_eval(p, i, xi)
    if p == 0:
        return 0.0
    lo = bernstein_deriv(p - 1, i - 1, xi, order - 1) if i - 1 >= 1 else 0.0
    hi = bernstein_deriv(p - 1, i, xi, order - 1) if i <= p else 0.0
    return p * (lo - hi) / 2


def bern_index(i, j, p):
    """Bivariate Bernstein numbering a(i,j) = (p+1)(j-1) + i."""
    return (p + 1) * (j - 1) + i


def bernstein_row(p, q, xi, eta, dxi=0, deta=0):
    """All n_b bivariate Bernstein values (or mixed derivatives) at one point."""
    bu = [bernstein_deriv(p, i, xi, dxi) for i in range(1, p + 2)]
    bv = [bernstein_deriv(q, j, eta, deta) for j in range(1, q + 2)]
    out = np.empty((p + 1) * (q + 1))
    for j in range(1, q + 2):
        for i in range(1, p + 2):
            out[bern_index(i, j, p) - 1] = bu[i - 1] * bv[j - 1]
    return out


@lru_cache(maxsize=None)
def bezier_coeffs_1d(vals, p, a, b):
    """Bernstein coefficients of the single B-spline N[vals] on the span
    [a, b]: N[vals](s(xi)) = sum_j c_j B_{j,p}(xi) there.  Exact rationals.

    The element must be a single span of the function: a knot strictly inside
    (a, b) is an error.
    """
    vals = tuple(Fraction(v) for v in vals)
    a, b = Fraction(a), Fraction(b)
    if any(a < v < b for v in vals):
        raise MeshStructureError(f"knot of {vals} lies strictly inside span ({a}, {b})")
    out = [Fraction(0)] * (p + 1)
    queue = [(Fraction(1), vals)]
    guard = 0
    while queue:
        guard += 1
        if guard > 10000:
            raise MeshStructureError("knot insertion did not terminate")
        c, v = queue.pop()
        if c == 0 or v[0] == v[-1] or v[-1] <= a or v[0] >= b:
            continue
        if all(x == a or x == b for x in v):
            j = sum(1 for x in v if x == b)
            if 1 <= j <= p + 1:
                out[j - 1] += c
            continue
        x = a if v[0] < a else b
        for cc, child in insert_knot(v, p, x):
            queue.append((c * cc, child))
    return tuple(out)


def bezier_coeffs_2d(hvals, vvals, p, q, rect):
    """Bivariate Bernstein coefficients on one element, bern_index ordering."""
    s1, s2, t1, t2 = rect
    ch = bezier_coeffs_1d(tuple(hvals), p, s1, s2)
    cv = bezier_coeffs_1d(tuple(vvals), q, t1, t2)
    out = [Fraction(0)] * ((p + 1) * (q + 1))
    for j in range(1, q + 2):
        for i in range(1, p + 2):
            out[bern_index(i, j, p) - 1] = ch[i - 1] * cv[j - 1]
    return out


@lru_cache(maxsize=None)
def _bezier_coeffs_2d_float(hvals, vvals, p, q, rect):
    return np.array([float(c) for c in bezier_coeffs_2d(hvals, vvals, p, q, rect)])


def _overlaps(support, rect):
    s1, s2, t1, t2 = support
    e1, e2, f1, f2 = rect
    return s1 < e2 and e1 < s2 and t1 < f2 and f1 < t2


def _support_array(supports):
    return np.array([[float(v) for v in sup] for sup in supports])


def _overlap_positions(sup_arr, rect):
    """Positions whose open support rectangle meets the open element rect.
    Floats are exact for the dyadic knot values arising from midpoint
    subdivision, so these comparisons match the rational ones."""
    e1, e2, f1, f2 = (float(v) for v in rect)
    hit = (sup_arr[:, 0] < e2) & (e1 < sup_arr[:, 1]) & (sup_arr[:, 2] < f2) & (f1 < sup_arr[:, 3])
    return np.nonzero(hit)[0]


def build_ien(space: HierarchicalSpace):
    """Per element, the positions (into space.functions) of the hierarchical
    functions nonzero on its interior, in canonical function order."""
    sup_arr = _support_array(space.support(hf) for hf in space.functions)
    return [list(_overlap_positions(sup_arr, he.param_rect)) for he in space.elements]


@dataclass
class ElementData:
    level: int
    param_rect: tuple
    ien: list
    C: np.ndarray       # n_loc x n_b
    weights: np.ndarray  # n_b element Bezier weights
    points: np.ndarray   # n_b x d element Bezier control points


def default_geometry(space: HierarchicalSpace):
    """Unit weights and level-1 Greville control points: the identity map of
    the parametric square (linear parameterization)."""
    sp1 = space.spaces[0]
    weights = np.ones(len(sp1.functions))
    return weights, sp1.greville_points()


def element_arrays(space, he, ien_row, weights=None, points=None, _geom_sup=None):
    """(C^e, w^e, Q^e) for one hierarchical element."""
    p, q = space.levels[0].mesh.p, space.levels[0].mesh.q
    if weights is None or points is None:
        weights, points = default_geometry(space)
    n_b = (p + 1) * (q + 1)
    C = np.empty((len(ien_row), n_b))
    for r, a in enumerate(ien_row):
        hf = space.functions[a]
        sp = space.spaces[hf.level - 1]
        C[r] = _bezier_coeffs_2d_float(
            sp.h_values(hf.fn), sp.v_values(hf.fn), p, q, he.param_rect
        )
    sp1 = space.spaces[0]
    if _geom_sup is None:
        _geom_sup = _support_array(sp1.support(fn) for fn in sp1.functions)
    wbf = np.zeros(n_b)
    qb = np.zeros((n_b, points.shape[1]))
    for g in _overlap_positions(_geom_sup, he.param_rect):
        fn = sp1.functions[g]
        cof = _bezier_coeffs_2d_float(
            sp1.h_values(fn), sp1.v_values(fn), p, q, he.param_rect
        )
        wg = float(weights[g])
        wbf += wg * cof
        qb += np.outer(cof, points[g]) * wg
    if (wbf <= 0).any():
        raise MeshStructureError(f"nonpositive element Bezier weight on element {he}")
    qb /= wbf[:, None]
    return ElementData(he.level, he.param_rect, list(ien_row), C, wbf, qb)


def extract_all(space, weights=None, points=None):
    """Element arrays for every element of the space, in canonical order."""
    ien = build_ien(space)
    sp1 = space.spaces[0]
    geom_sup = _support_array(sp1.support(fn) for fn in sp1.functions)
    return [
        element_arrays(space, he, row, weights, points, _geom_sup=geom_sup)
        for he, row in zip(space.elements, ien)
    ]


def local_linear_independence(edata, tol=1e-10):
    """rank(C^e) == n_loc with a relative singular-value tolerance.

    Holds on every element of a single-level analysis-suitable space.  On a
    partially refined hierarchy an element near the refinement boundary can
    carry more functions than Bernstein modes (coarse survivors overlap fine
    elements), in which case this truthfully reports False.
    """
    if edata.C.shape[0] == 0:
        return True
    if edata.C.shape[0] > edata.C.shape[1]:
        return False
    sv = np.linalg.svd(edata.C, compute_uv=False)
    return bool(sv[-1] > tol * sv[0])


# -- export -------------------------------------------------------------------

EXTRACT_MAGIC = "hasts-extraction 1"


def dump_extraction(space, elems):
    p, q = space.levels[0].mesh.p, space.levels[0].mesh.q
    out = [EXTRACT_MAGIC, f"degrees {p} {q}", f"n_f {space.n_f}", f"n_e {space.n_e}"]
    for k, ed in enumerate(elems):
        out.append(f"element {k}")
        out.append(f"level {ed.level}")
        out.append("rect " + " ".join(FMT % float(v) for v in ed.param_rect))
        out.append("ien " + " ".join(str(a) for a in ed.ien))
        for row in ed.C:
            out.append("C " + " ".join(FMT % v for v in row))
        out.append("w " + " ".join(FMT % v for v in ed.weights))
        for pt in ed.points:
            out.append("Q " + " ".join(FMT % v for v in pt))
    return "\n".join(out) + "\n"
