import json
from math import pi, sin

import numpy as np
import pytest

from mesh.complex import (
    DegenerateSimplexError,
    MeshError,
    NotWellCenteredError,
    UnknownComponentError,
    boundary_measure,
    build_complex,
)
from mesh.generators import annulus, annulus_rings, periodic_square, unit_square
from mesh.io import load_mesh, mesh_from_spec
from mesh.motion import MeshInversionError, deform, laplace_matrix


def test_unit_square_topology(square):
    assert square.euler_characteristic() == 1
    assert sorted(square.components) == ["bottom", "left", "right", "top"]
    d1, d2 = square.incidence(1), square.incidence(2)
    assert abs(d1 @ d2).max() == 0


def test_dual_areas_tile_the_domain(square, ring, torus):
    assert abs(square.dual_measures[0].sum() - 1.0) < 1e-12
    assert abs(torus.dual_measures[0].sum() - (2 * pi) ** 2) < 1e-10
    assert abs(ring.dual_measures[0].sum() - ring.primal_measures[2].sum()) < 1e-12
    for cx in (square, ring, torus):
        assert np.all(cx.dual_measures[0] > 0)
        assert np.all(cx.primal_measures[2] > 0)


def test_periodic_square_has_no_boundary(torus):
    assert torus.components == {}
    assert torus.euler_characteristic() == 0
    assert torus.is_periodic
    with pytest.raises(ValueError):
        periodic_square(5)


def test_annulus_normals_point_out_of_the_body(ring):
    assert ring.euler_characteristic() == 0
    assert ring.component("body").convention == -1
    for tag in ("body", "outer"):
        measure, normal = boundary_measure(ring, tag)
        comp = ring.component(tag)
        mids = ring.vertices[comp.vertices][comp.cell_vertices].mean(axis=1)
        assert np.all(np.sum(normal * mids, axis=1) > 0)
        assert np.all(measure > 0)


def test_annulus_outer_perimeter(ring):
    measure, _ = boundary_measure(ring, "outer")
    assert abs(measure.sum() - 2 * 16 * 1.5 * sin(pi / 16)) < 1e-12


def test_unknown_component(square):
    with pytest.raises(UnknownComponentError):
        square.component("lid")


def test_degenerate_and_bad_cells():
    with pytest.raises(DegenerateSimplexError):
        build_complex([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]])
    with pytest.raises(MeshError):
        build_complex([[0, 0], [1, 0], [0, 1]], [[0, 1, 3]])


def test_obtuse_cell_is_not_well_centered():
    with pytest.raises(NotWellCenteredError):
        build_complex([[0, 0], [2, 0], [1, 0.1]], [[0, 1, 2]])


def test_negative_cells_are_reoriented():
    cx = build_complex([[0, 0], [0, 1], [1, 0]], [[0, 1, 2]])
    assert cx.signed_volumes[0] > 0
    assert list(cx.components) == ["boundary"]


def test_mesh_from_spec_and_file(tmp_path):
    cx = mesh_from_spec({"kind": "unit-square", "res": 2})
    assert cx.n_cells(0) == len(unit_square(2).vertices)

    path = tmp_path / "tri.json"
    path.write_text(json.dumps({"vertices": [[0, 0], [1, 0], [0, 1]], "cells": [[0, 1, 2]]}))
    loaded = mesh_from_spec({"file": str(path)})
    assert loaded.n_cells(2) == 1
    assert load_mesh(str(path)) is loaded

    with pytest.raises(MeshError):
        mesh_from_spec({"kind": "hexagon"})
    with pytest.raises(MeshError):
        load_mesh(str(tmp_path / "missing.json"))


def test_uniform_translation_extends_uniformly(ring):
    shift = np.array([0.05, -0.02])
    disp = {tag: np.tile(shift, (len(c.vertices), 1)) for tag, c in ring.components.items()}
    moved, motion = deform(ring, disp, dt=0.1)
    assert np.max(np.abs(motion.displacement - shift)) < 1e-12
    assert np.max(np.abs(motion.velocity - shift / 0.1)) < 1e-10
    assert moved.topology is ring.topology


def test_zero_displacement_keeps_the_complex(ring):
    moved, motion = deform(ring, {}, dt=0.1)
    assert moved is ring
    assert not np.any(motion.velocity)


def test_body_pushed_through_the_wall_inverts_cells():
    cx = annulus(0.5, 1.5, 16, inner_tag="body", outer_tag="outer", inner_convention=-1)
    n = len(cx.component("body").vertices)
    with pytest.raises(MeshInversionError):
        deform(cx, {"body": np.tile([1.2, 0.0], (n, 1))}, dt=1.0)


def test_periodic_mesh_cannot_deform(torus):
    with pytest.raises(MeshError):
        deform(torus, {}, dt=0.1)


def test_body_rotation_matches_a_dense_solve(ring):
    angle = 1e-3
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    body = ring.component("body").vertices
    q = ring.vertices[body]
    moved, motion = deform(ring, {"body": q @ rot.T - q}, dt=1.0, fixed=["outer"])

    walls = np.concatenate([body, ring.component("outer").vertices])
    inside = np.setdiff1d(np.arange(ring.n_cells(0)), walls)
    lap = laplace_matrix(ring).toarray()
    given = np.zeros((ring.n_cells(0), 2))
    given[body] = q @ rot.T - q
    dense = given.copy()
    dense[inside] = np.linalg.solve(lap[np.ix_(inside, inside)], -lap[np.ix_(inside, walls)] @ given[walls])
    assert np.max(np.abs(motion.displacement - dense)) <= 1e-12
    assert np.max(np.abs(moved.vertices[body] - q @ rot.T)) <= 1e-14

    rings = annulus_rings(ring, 16)
    size = np.linalg.norm(motion.displacement, axis=1)
    means = np.array([size[rings == k].mean() for k in range(rings.max() + 1)])
    assert means[0] == pytest.approx(angle * 0.5, rel=1e-6)
    assert means[-1] == 0.0
    assert np.all(np.diff(means) < 0.0)


def test_fixed_walls_refuse_displacement(ring):
    n = len(ring.component("outer").vertices)
    with pytest.raises(MeshError):
        deform(ring, {"outer": np.full((n, 2), 1e-3)}, dt=0.1, fixed=["outer"])
    with pytest.raises(UnknownComponentError):
        deform(ring, {}, dt=0.1, fixed=["vessel"])
    moved, _ = deform(ring, {"outer": np.zeros((n, 2))}, dt=0.1, fixed=["outer"])
    assert moved is ring
