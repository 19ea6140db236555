"""Ready-made T-meshes: tensor grids, figure reconstructions for golden tests,
and a randomized generator of analysis-suitable meshes.

The ``build_mesh`` helper follows the open-knot frame convention: the first and
last p+1 vertical (q+1 horizontal) index lines are complete, and any core line
segment touching the core boundary is continued through the zero-area band to
the domain boundary.
"""

from __future__ import annotations

import random

import numpy as np

from .tmesh import TMesh


def core_range(m, n, p, q):
    """Index range [x1,x2] x [y1,y2] of the positive-parametric-area core."""
    return (p + 1, m - p, q + 1, n - q)


def build_mesh(m, n, p, q, vlines=(), hlines=()):
    """Assemble a T-mesh from core line pieces.

    vlines: (x, ylo, yhi) vertical segments; hlines: (y, xlo, xhi) horizontal
    segments.  Zero-knot boundary lines and band continuations are added
    automatically.
    """
    cx1, cx2, cy1, cy2 = core_range(m, n, p, q)
    hseg = np.zeros((m + 1, n + 1), dtype=bool)
    vseg = np.zeros((m + 1, n + 1), dtype=bool)
    for i in list(range(1, p + 2)) + list(range(m - p, m + 1)):
        vseg[i, 1:n] = True
    for j in list(range(1, q + 2)) + list(range(n - q, n + 1)):
        hseg[1:m, j] = True
    for x, ylo, yhi in vlines:
        if ylo == cy1:
            ylo = 1
        if yhi == cy2:
            yhi = n
        vseg[x, ylo:yhi] = True
    for y, xlo, xhi in hlines:
        if xlo == cx1:
            xlo = 1
        if xhi == cx2:
            xhi = m
        hseg[xlo:xhi, y] = True
    return TMesh(m, n, p, q, hseg, vseg)


def tensor_mesh(num_elements_x, num_elements_y, p, q):
    """Tensor-product mesh with the given number of Bezier elements per side."""
    m = num_elements_x - 1 + 2 * (p + 1)
    n = num_elements_y - 1 + 2 * (q + 1)
    return TMesh.tensor_grid(m, n, p, q)


# -- figure reconstructions (golden-test meshes) ------------------------------
# These reproduce the published local-index-vector and extension examples.
# The exact domains are reconstructions; the quoted index vectors are exact.


def index_vector_mesh_a():
    """p=q=2; the anchor is the cell (4,8) x (3,7)."""
    return build_mesh(
        13, 13, 2, 2,
        vlines=[(3, 3, 11), (4, 3, 11), (8, 3, 11), (10, 3, 11), (11, 3, 11)],
        hlines=[(3, 3, 11), (9, 3, 11), (11, 3, 11), (7, 4, 8)],
    )


def index_vector_mesh_b():
    """p=3, q=2; the anchor is the vertical edge {9} x (7,9)."""
    return build_mesh(
        15, 13, 3, 2,
        vlines=[(4, 3, 11), (5, 3, 11), (8, 3, 11), (9, 3, 11), (11, 3, 11), (12, 3, 11)],
        hlines=[(3, 4, 12), (6, 4, 12), (10, 4, 12), (11, 4, 12), (7, 8, 9), (9, 9, 11)],
    )


def index_vector_mesh_c():
    """p=2, q=3; the anchor is the horizontal edge (4,7) x {8}."""
    return build_mesh(
        12, 14, 2, 3,
        vlines=[(3, 4, 11), (4, 4, 11), (7, 4, 11), (8, 4, 11), (10, 4, 11)],
        hlines=[(4, 3, 10), (9, 3, 10), (10, 3, 10), (11, 3, 10), (8, 4, 7)],
    )


def index_vector_mesh_d():
    """p=q=3; the anchor is the vertex {8} x {8}."""
    return build_mesh(
        15, 14, 3, 3,
        vlines=[(x, 4, 11) for x in (4, 5, 8, 9, 11, 12)],
        hlines=[(y, 4, 12) for y in (4, 8, 9, 10, 11)],
    )


INDEX_VECTOR_CASES = {
    # name -> (mesh factory, anchor extents, expected hLocal, expected vLocal)
    "a": (index_vector_mesh_a, ((4, 8), (3, 7)), (3, 4, 8, 10), (2, 3, 7, 9)),
    "b": (index_vector_mesh_b, ((9, 9), (7, 9)), (5, 8, 9, 11, 12), (6, 7, 9, 10)),
    "c": (index_vector_mesh_c, ((4, 7), (8, 8)), (3, 4, 7, 8), (3, 4, 8, 9, 10)),
    "d": (index_vector_mesh_d, ((8, 8), (8, 8)), (4, 5, 8, 9, 11), (3, 4, 8, 9, 10)),
}


def extension_mesh_suitable():
    """Bicubic mesh with one horizontal and one vertical T-junction pair whose
    extensions stay apart; analysis-suitable."""
    mesh = TMesh.tensor_grid(15, 15, 3, 3)
    return mesh.without_segments(hsegs=[(7, 8)], vsegs=[(10, 5)])


def extension_mesh_unsuitable():
    """Bicubic mesh whose horizontal and vertical extensions cross at (8,8)."""
    mesh = TMesh.tensor_grid(15, 15, 3, 3)
    return mesh.without_segments(hsegs=[(7, 8)], vsegs=[(8, 6)])


# -- randomized analysis-suitable meshes --------------------------------------


def random_as_mesh(p, q, num_elements=8, removals=12, seed=0):
    """Random analysis-suitable T-mesh by rejection: start from a tensor grid
    and drop interior core segments while validity and suitability hold."""
    rng = random.Random(seed)
    mesh = tensor_mesh(num_elements, num_elements, p, q)
    cx1, cx2, cy1, cy2 = core_range(mesh.m, mesh.n, p, q)
    attempts = 0
    done = 0
    while done < removals and attempts < removals * 12:
        attempts += 1
        if rng.random() < 0.5:
            i = rng.randrange(cx1 + 1, cx2)
            j = rng.randrange(cy1 + 1, cy2 - 1)
            if not mesh.hseg[i, j]:
                continue
            cand = mesh.without_segments(hsegs=[(i, j)])
        else:
            i = rng.randrange(cx1 + 1, cx2 - 1)
            j = rng.randrange(cy1 + 1, cy2)
            if not mesh.vseg[i, j]:
                continue
            cand = mesh.without_segments(vsegs=[(i, j)])
        if cand.validate():
            continue
        if not cand.is_analysis_suitable()[0]:
            continue
        mesh = cand
        done += 1
    return mesh
