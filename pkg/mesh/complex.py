from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import factorial
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from loguru import logger


class MeshError(ValueError):
    pass


class NonManifoldError(MeshError):
    pass


class DegenerateSimplexError(MeshError):
    def __init__(self, cell: int, volume: float):
        super().__init__(f"degenerate or inverted simplex {cell} (signed volume {volume:.3e})")
        self.cell = cell


class NotWellCenteredError(MeshError):
    def __init__(self, cell: int, what: str):
        super().__init__(f"mesh is not well-centered at cell {cell}: {what}")
        self.cell = cell


class UnknownComponentError(MeshError):
    pass


DEFAULT_COMPONENT = "boundary"


def encode_rows(rows: np.ndarray, base: int) -> np.ndarray:
    """Lexicographic int64 key for sorted vertex tuples."""
    key = np.zeros(rows.shape[0], dtype=np.int64)
    for j in range(rows.shape[1]):
        key = key * base + rows[:, j].astype(np.int64)
    return key


def wrap_periodic(d: np.ndarray, period: np.ndarray | None) -> np.ndarray:
    """Minimum-image difference vectors on a periodic box (period 0 = open)."""
    if period is None:
        return d
    active = period > 0
    out = np.array(d, dtype=float, copy=True)
    out[..., active] -= period[active] * np.round(out[..., active] / period[active])
    return out


def permutation_parity(rows: np.ndarray) -> np.ndarray:
    """+1/-1 parity of the permutation that sorts each row."""
    m = rows.shape[1]
    inversions = np.zeros(rows.shape[0], dtype=np.int64)
    for i in range(m):
        for j in range(i + 1, m):
            inversions += rows[:, i] > rows[:, j]
    return np.where(inversions % 2 == 0, 1, -1).astype(np.int8)


@dataclass(frozen=True)
class BoundaryComponent:
    """One labeled piece of the boundary complex."""
    tag: str
    cells: np.ndarray          # global ids of (n-1)-faces
    signs: np.ndarray          # induced orientation of each face w.r.t. its top cell
    convention: int            # +1 outward from the domain, -1 outward from the enclosed body
    vertices: np.ndarray       # global vertex ids, sorted
    cell_vertices: np.ndarray  # local vertex indices per cell (into `vertices`)

    @property
    def orientation(self) -> np.ndarray:
        return self.convention * self.signs

    def __len__(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class Topology:
    dim: int
    simplices: List[np.ndarray]
    incidence: List[sp.csr_matrix | None]
    top_faces: np.ndarray       # (F, n+1) face opposite each local vertex
    top_face_signs: np.ndarray  # (F, n+1)
    face_cofaces: np.ndarray    # (n_faces, 2) top cells sharing a face, -1 if none
    boundary_cells: np.ndarray
    boundary_signs: np.ndarray
    components: Dict[str, BoundaryComponent]


def _build_topology(cells: np.ndarray, n_vertices: int, dim: int) -> Topology:
    base = max(n_vertices, 2)
    if base ** (dim + 1) >= 2 ** 62:
        raise MeshError(f"too many vertices ({n_vertices}) for a {dim}-complex")

    simplices: List[np.ndarray] = [np.arange(n_vertices, dtype=np.int64)[:, None]]
    keys: List[np.ndarray] = [np.arange(n_vertices, dtype=np.int64)]
    for k in range(1, dim):
        combos = np.concatenate([cells[:, list(c)] for c in combinations(range(dim + 1), k + 1)])
        combos = np.sort(combos, axis=1)
        uniq = np.unique(combos, axis=0)
        simplices.append(uniq)
        keys.append(encode_rows(uniq, base))
    simplices.append(cells.copy())

    incidence: List[sp.csr_matrix | None] = [None]
    for k in range(1, dim + 1):
        simp = simplices[k]
        if k == dim:
            parity = permutation_parity(simp)
            ordered = np.sort(simp, axis=1)
        else:
            parity = np.ones(len(simp), dtype=np.int8)
            ordered = simp
        rows, cols, vals = [], [], []
        for i in range(k + 1):
            face = np.delete(ordered, i, axis=1)
            idx = np.searchsorted(keys[k - 1], encode_rows(face, base))
            rows.append(idx)
            cols.append(np.arange(len(simp)))
            vals.append(((-1) ** i) * parity)
        mat = sp.csr_matrix(
            (np.concatenate(vals).astype(np.int8), (np.concatenate(rows), np.concatenate(cols))),
            shape=(len(simplices[k - 1]), len(simp)),
        )
        incidence.append(mat)

    # faces opposite each local vertex of the oriented top cells
    n_top = len(cells)
    top_faces = np.empty((n_top, dim + 1), dtype=np.int64)
    top_face_signs = np.empty((n_top, dim + 1), dtype=np.int8)
    top = incidence[dim].tocsc()
    for i in range(dim + 1):
        face = np.sort(np.delete(cells, i, axis=1), axis=1)
        idx = np.searchsorted(keys[dim - 1], encode_rows(face, base))
        top_faces[:, i] = idx
        top_face_signs[:, i] = np.asarray(top[idx, np.arange(n_top)]).ravel()

    n_faces = len(simplices[dim - 1])
    counts = np.bincount(top_faces.ravel(), minlength=n_faces)
    bad = np.flatnonzero(counts > 2)
    if len(bad):
        raise NonManifoldError(f"face {int(bad[0])} is shared by {int(counts[bad[0]])} top cells")
    face_cofaces = -np.ones((n_faces, 2), dtype=np.int64)
    fill = np.zeros(n_faces, dtype=np.int64)
    for c in range(n_top):
        for f in top_faces[c]:
            face_cofaces[f, fill[f]] = c
            fill[f] += 1

    boundary_cells = np.flatnonzero(counts == 1)
    boundary_signs = np.empty(len(boundary_cells), dtype=np.int8)
    for j, f in enumerate(boundary_cells):
        c = face_cofaces[f, 0]
        boundary_signs[j] = top_face_signs[c][top_faces[c] == f][0]

    return Topology(
        dim=dim,
        simplices=simplices,
        incidence=incidence,
        top_faces=top_faces,
        top_face_signs=top_face_signs,
        face_cofaces=face_cofaces,
        boundary_cells=boundary_cells,
        boundary_signs=boundary_signs,
        components={},
    )


def _label_components(
    topo: Topology,
    tags: Dict[str, Sequence] | None,
    conventions: Dict[str, int] | None,
) -> Dict[str, BoundaryComponent]:
    dim = topo.dim
    faces = topo.simplices[dim - 1]
    base = max(int(topo.simplices[0].shape[0]), 2)
    face_keys = encode_rows(faces, base)
    position = {int(f): j for j, f in enumerate(topo.boundary_cells)}
    conventions = dict(conventions or {})

    owner = -np.ones(len(topo.boundary_cells), dtype=np.int64)
    names: List[str] = []
    for name, entries in (tags or {}).items():
        ids = []
        for entry in entries:
            if np.ndim(entry) == 0:
                fid = int(entry)
                if not 0 <= fid < len(faces):
                    raise MeshError(f"boundary tag '{name}': face index {fid} out of range")
            else:
                key = encode_rows(np.sort(np.asarray(entry, dtype=np.int64))[None, :], base)
                fid = int(np.searchsorted(face_keys, key)[0])
                if fid >= len(faces) or face_keys[fid] != key[0]:
                    raise MeshError(f"boundary tag '{name}': {list(entry)} is not a face of the complex")
            if fid not in position:
                raise MeshError(f"boundary tag '{name}': face {fid} is not on the boundary")
            ids.append(position[fid])
        ids = np.asarray(ids, dtype=np.int64)
        if np.any(owner[ids] >= 0):
            raise MeshError(f"boundary tag '{name}' overlaps another component")
        owner[ids] = len(names)
        names.append(name)
    if np.any(owner < 0):
        owner[owner < 0] = len(names)
        names.append(DEFAULT_COMPONENT)

    components: Dict[str, BoundaryComponent] = {}
    for i, name in enumerate(names):
        sel = np.flatnonzero(owner == i)
        cells = topo.boundary_cells[sel]
        verts, local = np.unique(faces[cells], return_inverse=True)
        convention = int(conventions.get(name, 1))
        if convention not in (1, -1):
            raise MeshError(f"orientation convention of '{name}' must be +1 or -1")
        components[name] = BoundaryComponent(
            tag=name,
            cells=cells,
            signs=topo.boundary_signs[sel],
            convention=convention,
            vertices=verts,
            cell_vertices=local.reshape(len(cells), dim),
        )
    return components


class SimplicialComplex:
    """Simplicial complex embedded in flat R^n with circumcentric duals (n = 2).

    Immutable after construction. Cached operators live in `memo`.
    """

    def __init__(
        self,
        vertices: np.ndarray,
        topology: Topology,
        period: np.ndarray | None = None,
        require_well_centered: bool = True,
    ):
        self.dim = topology.dim
        self.vertices = np.array(vertices, dtype=float)
        self.vertices.setflags(write=False)
        self.topology = topology
        self.period = None if period is None else np.asarray(period, dtype=float)
        self._memo: Dict[str, object] = {}

        self.signed_volumes = self._signed_top_volumes()
        self.primal_measures = [np.ones(self.n_cells(0))] + [
            self._simplex_volumes(k) for k in range(1, self.dim + 1)
        ]
        self.dual_measures: List[np.ndarray] | None = None
        self.circumcenters: np.ndarray | None = None
        self.edge_dual_parts: np.ndarray | None = None
        if self.dim == 2:
            self._dual_geometry(require_well_centered)

    # topology views
    @property
    def simplices(self) -> List[np.ndarray]:
        return self.topology.simplices

    @property
    def components(self) -> Dict[str, BoundaryComponent]:
        return self.topology.components

    @property
    def has_dual(self) -> bool:
        return self.dual_measures is not None

    @property
    def is_periodic(self) -> bool:
        return self.period is not None

    def n_cells(self, k: int) -> int:
        return len(self.topology.simplices[k])

    def incidence(self, k: int) -> sp.csr_matrix:
        """Signed boundary matrix ∂_k mapping k-chains to (k-1)-chains."""
        if not 1 <= k <= self.dim:
            raise MeshError(f"no boundary operator of degree {k} on a {self.dim}-complex")
        return self.topology.incidence[k]

    def component(self, tag: str) -> BoundaryComponent:
        try:
            return self.topology.components[tag]
        except KeyError:
            raise UnknownComponentError(
                f"unknown boundary component '{tag}' (have {sorted(self.topology.components)})"
            ) from None

    def euler_characteristic(self) -> int:
        return int(sum((-1) ** k * self.n_cells(k) for k in range(self.dim + 1)))

    def memo(self, key: str, build: Callable[[], object]):
        if key not in self._memo:
            self._memo[key] = build()
        return self._memo[key]

    # geometry
    def wrap(self, d: np.ndarray) -> np.ndarray:
        return wrap_periodic(d, self.period)

    def edge_vectors(self) -> np.ndarray:
        e = self.simplices[1]
        return self.wrap(self.vertices[e[:, 1]] - self.vertices[e[:, 0]])

    def edge_midpoints(self) -> np.ndarray:
        e = self.simplices[1]
        return self.vertices[e[:, 0]] + 0.5 * self.edge_vectors()

    def local_coordinates(self, k: int) -> np.ndarray:
        """Unwrapped coordinates of each k-simplex, relative to its first vertex."""
        s = self.simplices[k]
        rel = self.wrap(self.vertices[s] - self.vertices[s[:, :1]])
        return rel

    def _simplex_volumes(self, k: int) -> np.ndarray:
        rel = self.local_coordinates(k)[:, 1:, :]
        gram = np.einsum("mid,mjd->mij", rel, rel)
        return np.sqrt(np.abs(np.linalg.det(gram))) / factorial(k)

    def _signed_top_volumes(self) -> np.ndarray:
        rel = self.local_coordinates(self.dim)[:, 1:, :]
        return np.linalg.det(rel) / factorial(self.dim)

    def _dual_geometry(self, require_well_centered: bool) -> None:
        rel = self.local_coordinates(2)
        a, b = rel[:, 1], rel[:, 2]
        den = 2.0 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
        aa, bb = np.sum(a * a, axis=1), np.sum(b * b, axis=1)
        cc = np.stack([(b[:, 1] * aa - a[:, 1] * bb) / den, (a[:, 0] * bb - b[:, 0] * aa) / den], axis=1)
        self.circumcenters = self.vertices[self.simplices[2][:, 0]] + cc

        n_top = self.n_cells(2)
        scale = float(np.mean(self.primal_measures[1]))
        tol = 1e-12 * scale
        parts = np.empty((n_top, 3))
        lengths = np.empty((n_top, 3))
        for i in range(3):
            j, k = [m for m in range(3) if m != i]
            t = rel[:, k] - rel[:, j]
            length = np.linalg.norm(t, axis=1)
            nrm = np.stack([t[:, 1], -t[:, 0]], axis=1) / length[:, None]
            toward = np.sign(np.sum((rel[:, i] - rel[:, j]) * nrm, axis=1))
            mid = 0.5 * (rel[:, j] + rel[:, k])
            parts[:, i] = np.sum((cc - mid) * nrm, axis=1) * toward
            lengths[:, i] = length
        self.edge_dual_parts = parts

        if require_well_centered:
            worst = np.argmin(parts.min(axis=1))
            if parts[worst].min() < -tol:
                raise NotWellCenteredError(int(worst), "circumcenter lies outside the triangle")

        faces = self.topology.top_faces
        edge_dual = np.zeros(self.n_cells(1))
        np.add.at(edge_dual, faces.ravel(), parts.ravel())
        vertex_dual = np.zeros(self.n_cells(0))
        cells = self.simplices[2]
        for i in range(3):
            others = [m for m in range(3) if m != i]
            share = 0.25 * sum(lengths[:, m] * parts[:, m] for m in others)
            np.add.at(vertex_dual, cells[:, i], share)

        if require_well_centered:
            interior = self.topology.face_cofaces[:, 1] >= 0
            bad = np.flatnonzero(interior & (edge_dual <= tol))
            if len(bad):
                cell = int(self.topology.face_cofaces[bad[0], 0])
                raise NotWellCenteredError(cell, f"interior edge {int(bad[0])} has non-positive dual length")
            bad = np.flatnonzero(vertex_dual <= tol * scale)
            if len(bad):
                raise NotWellCenteredError(int(bad[0]), "vertex dual cell has non-positive area")
        elif np.any(edge_dual[self.topology.face_cofaces[:, 1] >= 0] <= tol):
            logger.warning("Complex has interior edges with non-positive dual length")

        self.dual_measures = [vertex_dual, np.maximum(edge_dual, 0.0), np.ones(n_top)]

    def with_vertices(self, vertices: np.ndarray) -> "SimplicialComplex":
        """Same topology, new embedding. Inverted cells are reported by the caller."""
        return SimplicialComplex(vertices, self.topology, self.period, require_well_centered=False)

    def __repr__(self) -> str:
        counts = ", ".join(str(self.n_cells(k)) for k in range(self.dim + 1))
        return f"SimplicialComplex(dim={self.dim}, cells=({counts}), components={sorted(self.components)})"


def build_complex(
    vertices: Sequence[Sequence[float]],
    cells: Sequence[Sequence[int]],
    boundary_tags: Dict[str, Sequence] | None = None,
    conventions: Dict[str, int] | None = None,
    period: Sequence[float] | None = None,
    require_well_centered: bool = True,
) -> SimplicialComplex:
    """Assemble a complex from vertex coordinates and top simplices.

    Top simplices are reoriented to positive volume. Boundary tags map a
    component name to face indices (into the sorted face table) or vertex
    tuples; untagged boundary faces form the component "boundary".
    """
    verts = np.asarray(vertices, dtype=float)
    top = np.asarray(cells, dtype=np.int64)
    if verts.ndim != 2 or verts.shape[1] not in (2, 3):
        raise MeshError(f"vertices must have shape (N, 2) or (N, 3), got {verts.shape}")
    if not np.all(np.isfinite(verts)):
        raise MeshError("vertex coordinates must be finite")
    dim = verts.shape[1]
    if top.ndim != 2 or top.shape[1] != dim + 1:
        raise MeshError(f"top simplices must have {dim + 1} vertices each")
    if top.min() < 0 or top.max() >= len(verts):
        raise MeshError("top simplex references a missing vertex")
    if np.any(np.sort(top, axis=1)[:, 1:] == np.sort(top, axis=1)[:, :-1]):
        bad = int(np.flatnonzero(np.any(np.diff(np.sort(top, axis=1), axis=1) == 0, axis=1))[0])
        raise DegenerateSimplexError(bad, 0.0)

    per = None if period is None else np.asarray(period, dtype=float)
    rel = wrap_periodic(verts[top[:, 1:]] - verts[top[:, :1]], per)
    vol = np.linalg.det(rel) / factorial(dim)
    scale = np.mean(np.abs(vol)) if len(vol) else 1.0
    tiny = np.flatnonzero(np.abs(vol) <= 1e-12 * scale)
    if len(tiny):
        raise DegenerateSimplexError(int(tiny[0]), float(vol[tiny[0]]))
    flip = vol < 0
    if np.any(flip):
        top = top.copy()
        top[flip, -2:] = top[flip, -1:-3:-1]

    topo = _build_topology(top, len(verts), dim)
    components = _label_components(topo, boundary_tags, conventions)
    topo = Topology(**{**topo.__dict__, "components": components})
    complex_ = SimplicialComplex(verts, topo, per, require_well_centered=require_well_centered)
    logger.debug(f"Built {complex_!r}")
    return complex_


def boundary_measure(complex_: SimplicialComplex, component: str) -> Tuple[np.ndarray, np.ndarray]:
    """Per-cell (n-1)-measures and outward unit normals of a boundary component."""
    comp = complex_.component(component)
    faces = complex_.simplices[complex_.dim - 1][comp.cells]
    x = complex_.vertices
    orient = comp.orientation.astype(float)
    if complex_.dim == 2:
        t = complex_.wrap(x[faces[:, 1]] - x[faces[:, 0]]) * orient[:, None]
        normal = np.stack([t[:, 1], -t[:, 0]], axis=1)
    else:
        e1 = complex_.wrap(x[faces[:, 1]] - x[faces[:, 0]])
        e2 = complex_.wrap(x[faces[:, 2]] - x[faces[:, 0]])
        normal = np.cross(e1, e2) * orient[:, None]
    length = np.linalg.norm(normal, axis=1)
    measure = complex_.primal_measures[complex_.dim - 1][comp.cells]
    return measure, normal / length[:, None]
