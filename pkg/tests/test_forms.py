import numpy as np
import pytest

from forms.cochain import BoundaryField, Form, FormError, ValenceMismatchError, constant_form, zero_form
from forms.operators import (
    exterior_derivative,
    flat,
    hodge_star,
    integrate,
    interior_product,
    lie_derivative,
    pair,
    sharp,
    trace,
    vector_field,
    wedge,
    whitney_sharp_matrix,
)
from forms.tensor import (
    covector_from_cell_tensor,
    covector_from_top,
    dot_wedge,
    partial_trace,
    scalar_boundary_port,
    vector_boundary_port,
)
from orchestrator.checks import dd_zero, pairing_identity, stokes_residual


def test_dd_is_exactly_zero(rng, meshes):
    assert dd_zero(rng, meshes) == 0.0


def test_stokes(rng, meshes):
    assert stokes_residual(rng, meshes, trials=5) <= 1e-12


def test_stokes_on_the_ring_by_hand(rng, ring):
    alpha = Form(1, rng.normal(size=ring.n_cells(1)), ring)
    inside = integrate(exterior_derivative(alpha))
    edge = integrate(trace(alpha, "body", induced=True)) + integrate(trace(alpha, "outer", induced=True))
    assert abs(inside - edge) <= 1e-12


def test_double_hodge_star(rng, square):
    f = Form(0, rng.normal(size=square.n_cells(0)), square)
    assert np.allclose(hodge_star(hodge_star(f)).values, f.values, rtol=1e-12, atol=0)
    a = Form(1, rng.normal(size=square.n_cells(1)), square)
    assert np.allclose(hodge_star(hodge_star(a)).values, -a.values, rtol=1e-12, atol=0)


def test_product_rule_on_vertices(rng, ring):
    f = Form(0, rng.normal(size=ring.n_cells(0)), ring)
    g = Form(0, rng.normal(size=ring.n_cells(0)), ring)
    lhs = exterior_derivative(wedge(f, g))
    rhs = wedge(exterior_derivative(f), g) + wedge(f, exterior_derivative(g))
    assert np.max(np.abs(lhs.values - rhs.values)) <= 1e-12


def test_wedge_with_one(rng, square):
    beta = Form(1, rng.normal(size=square.n_cells(1)), square)
    assert np.allclose(wedge(constant_form(square), beta).values, beta.values, rtol=0, atol=1e-15)


def test_pair_and_integrate_degrees(rng, square):
    a = Form(1, rng.normal(size=square.n_cells(1)), square)
    b = hodge_star(a)
    assert pair(a, b) == pytest.approx(float(np.dot(a.values, b.values)))
    with pytest.raises(FormError):
        integrate(a)
    with pytest.raises(FormError):
        pair(a, a)


def test_form_shape_is_checked(square):
    with pytest.raises(FormError):
        Form(1, np.zeros(3), square)
    with pytest.raises(FormError):
        zero_form(square, 1) + zero_form(square, 1, dual=True)


def test_sharp_recovers_constant_fields(square, ring):
    for cx in (square, ring):
        c = np.array([0.7, -1.3])
        vv = np.tile(c, (cx.n_cells(0), 1))
        assert np.max(np.abs(sharp(flat(vv, cx)).array() - c)) <= 1e-10


def test_top_form_contraction(rng, meshes):
    for cx in meshes:
        h = Form(2, rng.normal(size=cx.n_cells(2)) * cx.primal_measures[2], cx)
        vv = rng.normal(size=(cx.n_cells(0), 2))
        lhs = interior_product(vv, h).values
        rhs = dot_wedge(covector_from_top(h), vector_field(vv, cx)).values
        assert np.max(np.abs(lhs - rhs)) <= 1e-14


def test_pairing_identity(rng, meshes):
    assert pairing_identity(rng, meshes, fields=30) <= 1e-12


def test_partial_trace_of_stress_is_traction(ring):
    # uniform pressure -I: traction -n|e| with n out of the body
    cells = np.tile(-np.eye(2), (ring.n_cells(2), 1, 1))
    alpha = partial_trace(covector_from_cell_tensor(cells, ring), "body")
    assert np.max(np.abs(alpha.values.sum(axis=0))) <= 1e-12
    comp = ring.component("body")
    mids = ring.vertices[comp.vertices][comp.cell_vertices].mean(axis=1)
    assert np.all(np.sum(alpha.values * mids, axis=1) < 0)


def test_valence_errors(rng, ring):
    v = vector_field(rng.normal(size=(ring.n_cells(0), 2)), ring)
    with pytest.raises(ValenceMismatchError):
        dot_wedge(v, v)
    one_form = covector_from_cell_tensor(rng.normal(size=(ring.n_cells(2), 2, 2)), ring, leg="tangent")
    with pytest.raises(ValenceMismatchError):
        partial_trace(one_form, "body")
    with pytest.raises(ValenceMismatchError):
        BoundaryField("body", "scalar", 0, np.zeros((16, 2)), ring)


def test_boundary_port_representations_agree(rng, ring):
    density = Form(0, rng.uniform(0.5, 2.0, ring.n_cells(0)), ring)
    u = rng.normal(size=(ring.n_cells(0), 2))
    for tag in ring.components:
        e_s, f_s = scalar_boundary_port(density, u, tag)
        e_v, f_v = vector_boundary_port(density, u, tag)
        assert np.max(np.abs(wedge(e_s, f_s).values - dot_wedge(e_v, f_v).values)) <= 1e-12


def test_lie_derivative_along_a_field(rng, square):
    vv = rng.normal(size=(square.n_cells(0), 2))
    assert np.all(lie_derivative(vv, constant_form(square)).values == 0.0)
    f = Form(0, rng.normal(size=square.n_cells(0)), square)
    assert np.array_equal(lie_derivative(vv, f).values, interior_product(vv, exterior_derivative(f)).values)
    still = lie_derivative(np.zeros_like(vv), Form(2, rng.normal(size=square.n_cells(2)), square))
    assert np.all(still.values == 0.0)


def test_one_form_contraction_is_the_metric_pairing(square, ring):
    w = np.array([0.7, -1.3])
    v = np.array([-0.4, 2.1])
    for cx in (square, ring):
        alpha = flat(np.tile(w, (cx.n_cells(0), 1)), cx)
        contracted = interior_product(np.tile(v, (cx.n_cells(0), 1)), alpha)
        assert contracted.degree == 0
        assert np.max(np.abs(contracted.values - v @ w)) <= 1e-10


def test_whitney_sharp_reproduces_constant_fields(square, ring, torus):
    c = np.array([0.7, -1.3])
    for cx in (square, ring, torus):
        alpha = flat(np.tile(c, (cx.n_cells(0), 1)), cx)
        cells = (whitney_sharp_matrix(cx) @ alpha.values).reshape(cx.n_cells(2), 2)
        assert np.max(np.abs(cells - c)) <= 1e-12
