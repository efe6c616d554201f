from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from loguru import logger

from mesh.complex import MeshError, SimplicialComplex


class MeshInversionError(RuntimeError):
    """A cell lost positive orientation; the scenario needs remeshing."""

    def __init__(self, cell: int, volume: float):
        super().__init__(f"mesh inverted at cell {cell} (signed volume {volume:.3e}); remeshing required")
        self.cell = cell


@dataclass(frozen=True)
class MeshMotion:
    """Per-vertex displacement and ALE velocity u over one step ending at t."""
    displacement: np.ndarray
    velocity: np.ndarray
    t: float = 0.0

    def boundary_trace(self, complex_: SimplicialComplex, component: str) -> np.ndarray:
        return self.velocity[complex_.component(component).vertices]

    def with_trace(self, vertices: np.ndarray, values: np.ndarray) -> "MeshMotion":
        u = self.velocity.copy()
        u[vertices] = values
        return MeshMotion(self.displacement, u, self.t)

    @staticmethod
    def still(complex_: SimplicialComplex, t: float = 0.0) -> "MeshMotion":
        z = np.zeros_like(complex_.vertices)
        return MeshMotion(z, z.copy(), t)


def laplace_matrix(complex_: SimplicialComplex) -> sp.csr_matrix:
    """Vertex Laplacian ∂₁ ⋆₁ ∂₁ᵀ with circumcentric (cotangent) weights."""

    def build():
        d0 = complex_.incidence(1).astype(float)
        star1 = complex_.dual_measures[1] / complex_.primal_measures[1]
        return (d0 @ sp.diags(star1) @ d0.T).tocsr()

    return complex_.memo("laplace0", build)


def harmonic_extension(complex_: SimplicialComplex, fixed: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Extend vertex data given on `fixed` vertices harmonically to the rest."""
    n = complex_.n_cells(0)
    fixed = np.asarray(fixed, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or len(values) != len(fixed):
        raise MeshError(f"need one row of values per fixed vertex, got {values.shape} for {len(fixed)} vertices")
    if len(np.unique(fixed)) != len(fixed):
        raise MeshError("fixed vertices must be distinct")
    out = np.zeros((n, values.shape[1]))
    out[fixed] = values
    free = np.setdiff1d(np.arange(n), fixed)
    if len(free) == 0:
        return out
    lap = laplace_matrix(complex_).tocsc()
    a_ff = lap[free][:, free].tocsc()
    a_fb = lap[free][:, fixed]
    lu = splu(a_ff)
    out[free] = lu.solve(-(a_fb @ values))
    return out


def deform(
    complex_: SimplicialComplex,
    boundary_displacement: Dict[str, np.ndarray] | np.ndarray,
    dt: float,
    t: float = 0.0,
    fixed: Iterable[str] = (),
) -> Tuple[SimplicialComplex, MeshMotion]:
    """Move boundary vertices and extend the displacement harmonically inside.

    `boundary_displacement` is either a mapping component -> (n_vertices, dim)
    array (components left out stay fixed) or one array over all boundary
    vertices in `complex_.topology` component order. Components named in
    `fixed` are walls of the vessel: a nonzero displacement on any of their
    vertices is rejected.
    """
    if complex_.is_periodic:
        raise MeshError("periodic complexes have no boundary to deform")
    dim = complex_.dim
    walls = set(fixed)
    for tag in walls:
        complex_.component(tag)
    fixed_parts, value_parts = [], []
    if isinstance(boundary_displacement, dict):
        for tag in boundary_displacement:
            complex_.component(tag)
        for tag, comp in complex_.components.items():
            disp = boundary_displacement.get(tag)
            disp = np.zeros((len(comp.vertices), dim)) if disp is None else np.asarray(disp, dtype=float)
            if disp.shape != (len(comp.vertices), dim):
                raise MeshError(f"displacement for '{tag}' must have shape {(len(comp.vertices), dim)}")
            fixed_parts.append(comp.vertices)
            value_parts.append(disp)
    else:
        disp = np.asarray(boundary_displacement, dtype=float)
        offset = 0
        for comp in complex_.components.values():
            fixed_parts.append(comp.vertices)
            value_parts.append(disp[offset: offset + len(comp.vertices)])
            offset += len(comp.vertices)
        if offset != len(disp):
            raise MeshError(f"expected {offset} boundary displacements, got {len(disp)}")

    for tag, part in zip(complex_.components, value_parts):
        if tag in walls and np.any(part):
            raise MeshError(f"component '{tag}' is fixed but was given a displacement of {np.abs(part).max():.3e}")

    fixed_ids = np.concatenate(fixed_parts)
    values = np.concatenate(value_parts)
    # components may share corner vertices; the last writer wins consistently
    fixed_ids, first = np.unique(fixed_ids[::-1], return_index=True)
    values = values[::-1][first]
    pinned = np.concatenate([complex_.component(tag).vertices for tag in walls]) if walls else np.zeros(0, dtype=np.int64)
    if np.any(values[np.isin(fixed_ids, pinned)]):
        raise MeshError("a vertex shared with a fixed component was given a displacement")

    if not np.any(values):
        return complex_, MeshMotion.still(complex_, t)
    if dt <= 0.0:
        raise MeshError(f"dt must be positive to move the mesh, got {dt}")

    displacement = harmonic_extension(complex_, fixed_ids, values)
    moved = complex_.with_vertices(complex_.vertices + displacement)
    bad = np.flatnonzero(moved.signed_volumes <= 0.0)
    if len(bad):
        raise MeshInversionError(int(bad[0]), float(moved.signed_volumes[bad[0]]))
    logger.debug(f"Deformed mesh: max displacement {np.abs(displacement).max():.3e}")
    return moved, MeshMotion(displacement, displacement / dt, t)
