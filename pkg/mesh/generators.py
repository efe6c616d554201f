"""Structured well-centered meshes used by the built-in scenarios."""
from __future__ import annotations

from math import cos, floor, log, pi, sin, sqrt
from typing import Dict, List, Tuple

import numpy as np

from mesh.complex import SimplicialComplex, build_complex


def unit_square(res: int, length: float = 1.0) -> SimplicialComplex:
    """Square [0, L]^2 triangulated with staggered rows of isosceles cells.

    Odd rows are shifted by half a cell; the side columns are closed with
    right triangles whose right angle sits on the wall. Components:
    bottom, top, left, right.
    """
    if res < 1:
        raise ValueError(f"res must be >= 1, got {res}")
    h = length / res
    verts: List[Tuple[float, float]] = []
    rows: List[List[int]] = []
    for j in range(res + 1):
        y = j * h
        if j % 2 == 0:
            xs = [i * h for i in range(res + 1)]
        else:
            xs = [0.0] + [(i + 0.5) * h for i in range(res)] + [length]
        rows.append(list(range(len(verts), len(verts) + len(xs))))
        verts.extend((x, y) for x in xs)

    cells: List[Tuple[int, int, int]] = []
    for j in range(res):
        b, t = rows[j], rows[j + 1]
        if j % 2 == 0:
            cells.append((b[0], t[1], t[0]))
            cells.extend((b[i], b[i + 1], t[i + 1]) for i in range(res))
            cells.extend((b[i], t[i + 1], t[i]) for i in range(1, res))
            cells.append((b[res], t[res + 1], t[res]))
        else:
            cells.append((b[0], b[1], t[0]))
            cells.extend((b[i + 1], t[i + 1], t[i]) for i in range(res))
            cells.extend((b[i], b[i + 1], t[i]) for i in range(1, res))
            cells.append((b[res], b[res + 1], t[res]))

    tags: Dict[str, list] = {
        "bottom": [(rows[0][i], rows[0][i + 1]) for i in range(len(rows[0]) - 1)],
        "top": [(rows[res][i], rows[res][i + 1]) for i in range(len(rows[res]) - 1)],
        "left": [(rows[j][0], rows[j + 1][0]) for j in range(res)],
        "right": [(rows[j][-1], rows[j + 1][-1]) for j in range(res)],
    }
    return build_complex(np.array(verts), np.array(cells), boundary_tags=tags)


def periodic_square(res: int, length: float = 2.0 * pi) -> SimplicialComplex:
    """Doubly periodic square (flat torus) with staggered rows; res must be even."""
    if res < 4 or res % 2:
        raise ValueError(f"periodic_square needs an even res >= 4, got {res}")
    h = length / res
    idx = np.arange(res * res).reshape(res, res)  # [row, column]
    jj, ii = np.meshgrid(np.arange(res), np.arange(res), indexing="ij")
    verts = np.stack([((ii + 0.5 * (jj % 2)) * h).ravel(), (jj * h).ravel()], axis=1)

    cells = []
    for j in range(res):
        b, t = idx[j], idx[(j + 1) % res]
        for i in range(res):
            i1 = (i + 1) % res
            if j % 2 == 0:
                cells.append((b[i], b[i1], t[i]))
                cells.append((b[i1], t[i1], t[i]))
            else:
                cells.append((b[i], b[i1], t[i1]))
                cells.append((b[i], t[i1], t[i]))
    return build_complex(verts, np.array(cells), period=(length, length))


def annulus(
    r_in: float,
    r_out: float,
    res: int,
    inner_tag: str = "inner",
    outer_tag: str = "outer",
    inner_convention: int = 1,
    center: Tuple[float, float] = (0.0, 0.0),
) -> SimplicialComplex:
    """Annulus with `res` vertices per ring and geometrically graded rings.

    Consecutive rings are rotated by half a sector so every cell is a
    near-equilateral acute triangle.
    """
    if not 0.0 < r_in < r_out:
        raise ValueError(f"need 0 < r_in < r_out, got {r_in}, {r_out}")
    if res < 8:
        raise ValueError(f"res must be >= 8, got {res}")
    growth = 1.0 + (2.0 * pi / res) * sqrt(3.0) / 2.0
    n_rings = max(1, floor(log(r_out / r_in) / log(growth)))
    ratio = (r_out / r_in) ** (1.0 / n_rings)

    cx, cy = center
    verts = []
    for k in range(n_rings + 1):
        r = r_in * ratio ** k if k < n_rings else r_out
        phase = k * pi / res
        for i in range(res):
            a = 2.0 * pi * i / res + phase
            verts.append((cx + r * cos(a), cy + r * sin(a)))

    def vid(k: int, i: int) -> int:
        return k * res + i % res

    cells = []
    for k in range(n_rings):
        for i in range(res):
            cells.append((vid(k, i), vid(k + 1, i), vid(k, i + 1)))
            cells.append((vid(k + 1, i), vid(k + 1, i + 1), vid(k, i + 1)))

    tags = {
        inner_tag: [(vid(0, i), vid(0, i + 1)) for i in range(res)],
        outer_tag: [(vid(n_rings, i), vid(n_rings, i + 1)) for i in range(res)],
    }
    return build_complex(
        np.array(verts), np.array(cells), boundary_tags=tags, conventions={inner_tag: inner_convention}
    )


def annulus_rings(complex_: SimplicialComplex, res: int) -> np.ndarray:
    """Ring index of every vertex of a mesh produced by `annulus`."""
    return np.arange(complex_.n_cells(0)) // res


def crisscross_square(res: int, length: float = 1.0) -> SimplicialComplex:
    """Square split into four right triangles per cell through its center.

    Square sides get zero dual length, so the mesh is built without the
    well-centered check; it serves topology-only uses.
    """
    h = length / res
    grid = np.arange((res + 1) ** 2).reshape(res + 1, res + 1)
    gx, gy = np.meshgrid(np.arange(res + 1) * h, np.arange(res + 1) * h, indexing="xy")
    corners = np.stack([gx.ravel(), gy.ravel()], axis=1)
    cx, cy = np.meshgrid((np.arange(res) + 0.5) * h, (np.arange(res) + 0.5) * h, indexing="xy")
    centers = np.stack([cx.ravel(), cy.ravel()], axis=1)
    verts = np.concatenate([corners, centers])
    offset = len(corners)

    cells = []
    for j in range(res):
        for i in range(res):
            c = offset + j * res + i
            a, b = grid[j, i], grid[j, i + 1]
            d, e = grid[j + 1, i], grid[j + 1, i + 1]
            cells.extend([(a, b, c), (b, e, c), (e, d, c), (d, a, c)])
    return build_complex(verts, np.array(cells), require_well_centered=False)


GENERATORS = {
    "unit-square": unit_square,
    "periodic-square": periodic_square,
    "annulus": annulus,
    "crisscross-square": crisscross_square,
}
