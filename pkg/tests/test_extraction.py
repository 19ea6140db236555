"""Bezier extraction: Bernstein basis, element operators, connectivity.

The Bernstein oracle is the closed-form polynomial in the mapped variable
u = (xi+1)/2; extraction operators are checked by evaluating both sides of
N_a = C^e B at Gauss points.
"""

from fractions import Fraction
from math import comb

import numpy as np
import pytest

from hasts import samples
from hasts.basis import Space, bspline_eval
from hasts.benchmarks import tensor_space
from hasts.extraction import (
    ElementData,
    bern_index,
    bernstein_deriv,
    bernstein_eval,
    bernstein_row,
    bezier_coeffs_1d,
    bezier_coeffs_2d,
    build_ien,
    default_geometry,
    dump_extraction,
    element_arrays,
    extract_all,
    local_linear_independence,
)
from hasts.tmesh import MeshStructureError


def bernstein_oracle(p, i, xi):
    u = (xi + 1) / 2
    return comb(p, i - 1) * u ** (i - 1) * (1 - u) ** (p - i + 1)


def gauss_points(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


# -- Bernstein basis -----------------------------------------------------------


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_bernstein_matches_closed_form(p):
    xs = np.linspace(-1, 1, 15)
    for i in range(1, p + 2):
        for xi in xs:
            assert bernstein_eval(p, i, xi) == pytest.approx(
                bernstein_oracle(p, i, xi), abs=1e-14
            )
    # partition of unity on the reference interval
    for xi in xs:
        assert sum(bernstein_eval(p, i, xi) for i in range(1, p + 2)) == pytest.approx(
            1.0, abs=1e-14
        )


@pytest.mark.parametrize("p,order", [(2, 1), (3, 1), (3, 2)])
def test_bernstein_derivative_finite_difference(p, order):
    h = 1e-6
    for i in range(1, p + 2):
        for xi in np.linspace(-0.9, 0.9, 7):
            fd = (
                bernstein_deriv(p, i, xi + h, order - 1)
                - bernstein_deriv(p, i, xi - h, order - 1)
            ) / (2 * h)
            assert bernstein_deriv(p, i, xi, order) == pytest.approx(fd, abs=1e-6)


def test_bernstein_index_numbering():
    assert bern_index(1, 1, 2) == 1
    assert bern_index(3, 1, 2) == 3
    assert bern_index(1, 2, 2) == 4
    assert bern_index(3, 3, 2) == 9
    row = bernstein_row(2, 2, -1.0, -1.0)
    assert row[0] == pytest.approx(1.0)
    assert row[1:].sum() == pytest.approx(0.0, abs=1e-15)


# -- 1D extraction coefficients ------------------------------------------------


def test_bezier_coeffs_1d_reproduce_function():
    cases = [
        ((0, 0, 0, 1), 2, 0, Fraction(1, 2)),
        ((0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1), 3, Fraction(1, 4), Fraction(1, 2)),
        ((Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1), 2, Fraction(1, 2), Fraction(3, 4)),
    ]
    for vals, p, a, b in cases:
        coeffs = bezier_coeffs_1d(tuple(Fraction(v) for v in vals), p, Fraction(a), Fraction(b))
        assert len(coeffs) == p + 1
        for xi in np.linspace(-1, 1, 9):
            s = float(a) + (xi + 1) / 2 * float(b - a)
            want = bspline_eval(vals, p, s) if s < float(vals[-1]) else bspline_eval(vals, p, s)
            got = sum(float(c) * bernstein_eval(p, j + 1, xi) for j, c in enumerate(coeffs))
            assert got == pytest.approx(want, abs=1e-13)


def test_bezier_coeffs_identity_on_single_span():
    # open vector, one span: the B-splines are the Bernstein polynomials
    p = 3
    for i in range(p + 1):
        vals = tuple([Fraction(0)] * (p + 1 - i) + [Fraction(1)] * (i + 1))
        coeffs = bezier_coeffs_1d(vals, p, Fraction(0), Fraction(1))
        want = [Fraction(0)] * (p + 1)
        want[i] = Fraction(1)
        assert list(coeffs) == want


def test_bezier_coeffs_reject_interior_knot():
    with pytest.raises(MeshStructureError):
        bezier_coeffs_1d(
            (Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2)), 2, Fraction(0), Fraction(1)
        )


def test_bezier_coeffs_2d_is_tensor_product():
    hv = (Fraction(0), Fraction(0), Fraction(1, 2), Fraction(1))
    vv = (Fraction(0), Fraction(1, 2), Fraction(1), Fraction(1))
    rect = (Fraction(0), Fraction(1, 2), Fraction(1, 2), Fraction(1))
    c2 = bezier_coeffs_2d(hv, vv, 2, 2, rect)
    ch = bezier_coeffs_1d(hv, 2, rect[0], rect[1])
    cv = bezier_coeffs_1d(vv, 2, rect[2], rect[3])
    for j in range(1, 4):
        for i in range(1, 4):
            assert c2[bern_index(i, j, 2) - 1] == ch[i - 1] * cv[j - 1]


# -- element operators ---------------------------------------------------------


def test_single_element_patch_extracts_to_identity():
    for p in (2, 3):
        space = tensor_space(1, p)
        elems = extract_all(space)
        assert len(elems) == 1
        ed = elems[0]
        n_b = (p + 1) * (p + 1)
        assert ed.C.shape == (n_b, n_b)
        assert np.array_equal(ed.C, np.eye(n_b))


def consistency_error(space, elems, ng=5):
    xi, _ = gauss_points(ng)
    worst = 0.0
    for ed in elems:
        s1, s2, t1, t2 = (float(v) for v in ed.param_rect)
        for gx in xi:
            for gy in xi:
                s = (s1 + s2) / 2 + gx * (s2 - s1) / 2
                t = (t1 + t2) / 2 + gy * (t2 - t1) / 2
                B = bernstein_row(
                    space.levels[0].mesh.p, space.levels[0].mesh.q, gx, gy
                )
                vals = ed.C @ B
                for r, a in enumerate(ed.ien):
                    ref = space.eval_function(space.functions[a], s, t)
                    worst = max(worst, abs(vals[r] - ref))
    return worst


def test_extraction_consistency_on_hierarchies(hierarchies):
    for space in hierarchies:
        elems = extract_all(space)
        assert consistency_error(space, elems) < 1e-12


def test_extraction_consistency_on_t_meshes(as_meshes):
    from hasts.basis import GlobalKnots
    from hasts.hierarchy import LevelMesh, build_hierarchy

    for mesh in as_meshes[:6]:
        space = build_hierarchy(
            [
                LevelMesh(
                    1,
                    mesh,
                    GlobalKnots.uniform_open(mesh.m, mesh.p),
                    GlobalKnots.uniform_open(mesh.n, mesh.q),
                    None,
                )
            ]
        )
        elems = extract_all(space)
        assert consistency_error(space, elems, ng=3) < 1e-12


def test_local_linear_independence_single_level(as_meshes):
    from hasts.basis import GlobalKnots
    from hasts.hierarchy import LevelMesh, build_hierarchy

    for mesh in as_meshes[:6]:
        space = build_hierarchy(
            [
                LevelMesh(
                    1,
                    mesh,
                    GlobalKnots.uniform_open(mesh.m, mesh.p),
                    GlobalKnots.uniform_open(mesh.n, mesh.q),
                    None,
                )
            ]
        )
        for ed in extract_all(space):
            assert local_linear_independence(ed)
            assert len(ed.ien) <= ed.C.shape[1]


def test_local_linear_independence_uniform_hierarchies():
    from hasts.hierarchy import refine_by_elements

    for p in (2, 3):
        space = tensor_space(2, p)
        for _ in range(2):
            space = refine_by_elements(space, list(space.elements))
        assert len(space.levels) == 3
        for ed in extract_all(space):
            assert local_linear_independence(ed)


def test_local_dependence_at_refinement_boundary(hierarchies):
    """A partially refined hierarchy carries coarse survivors across fine
    elements near the refinement boundary; there n_loc can exceed the
    Bernstein dimension and the check must report the dependence."""
    space = hierarchies[0]
    flags = [local_linear_independence(ed) for ed in extract_all(space)]
    n_b = 9
    over = [ed for ed in extract_all(space) if len(ed.ien) > n_b]
    assert over, "expected at least one overfull element"
    assert not all(flags)
    # coarse-only and deep-interior elements remain independent
    for ed in extract_all(space):
        if len(ed.ien) <= n_b:
            assert local_linear_independence(ed)


def test_ien_matches_pointwise_support(hierarchies):
    rng = np.random.default_rng(17)
    for space in hierarchies[:2]:
        ien = build_ien(space)
        for he, row in zip(space.elements, ien):
            s1, s2, t1, t2 = (float(v) for v in he.param_rect)
            for _ in range(3):
                s = rng.uniform(s1, s2)
                t = rng.uniform(t1, t2)
                vals = space.eval_all(s, t)
                nz = set(np.nonzero(np.abs(vals) > 1e-14)[0])
                assert nz <= set(row)


def test_default_geometry_is_identity_map():
    space = tensor_space(3, 2)
    space_ref = space
    elems = extract_all(space_ref)
    xi, _ = gauss_points(3)
    for ed in elems:
        s1, s2, t1, t2 = (float(v) for v in ed.param_rect)
        assert np.allclose(ed.weights, 1.0)
        for gx in xi:
            for gy in xi:
                B = bernstein_row(2, 2, gx, gy)
                x, y = B @ ed.points
                assert x == pytest.approx((s1 + s2) / 2 + gx * (s2 - s1) / 2, abs=1e-13)
                assert y == pytest.approx((t1 + t2) / 2 + gy * (t2 - t1) / 2, abs=1e-13)


def test_dump_extraction_deterministic(hierarchies):
    space = hierarchies[0]
    a = dump_extraction(space, extract_all(space))
    b = dump_extraction(space, extract_all(space))
    assert a == b
    assert a.startswith("hasts-extraction 1\n")
