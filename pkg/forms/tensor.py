"""Tensor-valued forms: covector representations, partial trace and ∧̇.

Covector-valued (n-1)-forms evaluate a cell tensor Σ on the right normal
rot(t) = (t_y, -t_x) of each edge, so ptr(Σ) on a boundary cell is the
traction Σ·n|e| with n outward for the component convention.
"""
from __future__ import annotations

from typing import Tuple

import numpy as np

from forms.cochain import BoundaryField, Form, FormError, TensorValuedForm, ValenceMismatchError
from forms.operators import edge_density, exterior_derivative, star_flat, vector_field, vertex_vectors
from mesh.complex import SimplicialComplex


def rot(t: np.ndarray) -> np.ndarray:
    return np.stack([t[:, 1], -t[:, 0]], axis=1)


def _edge_average(cells: np.ndarray, complex_: SimplicialComplex) -> np.ndarray:
    cof = complex_.topology.face_cofaces
    first = cells[cof[:, 0]]
    second = np.where((cof[:, 1] >= 0)[:, None, None], cells[np.maximum(cof[:, 1], 0)], first)
    return 0.5 * (first + second)


def covector_from_top(alpha: Form) -> TensorValuedForm:
    """Covector representation h·δ of a top form with density h."""
    cx = alpha.complex
    vals = edge_density(alpha)[:, None] * rot(cx.edge_vectors())
    return TensorValuedForm.from_array("covector", cx.dim - 1, vals, cx)


def covector_from_vertex_density(f, complex_: SimplicialComplex | None = None) -> TensorValuedForm:
    """Covector representation of a scalar density given at vertices (⋆p, ⋆ℋ)."""
    if isinstance(f, Form):
        if f.degree != 0 or f.dual or f.component is not None:
            raise FormError("vertex density must be a primal 0-form")
        complex_, f = f.complex, f.values
    e = complex_.simplices[1]
    mid = 0.5 * (f[e[:, 0]] + f[e[:, 1]])
    return TensorValuedForm.from_array("covector", complex_.dim - 1, mid[:, None] * rot(complex_.edge_vectors()), complex_)


def covector_from_cell_tensor(
    cells: np.ndarray,
    complex_: SimplicialComplex,
    leg: str = "normal",
    symmetric: bool = False,
) -> TensorValuedForm:
    """Sample a per-top-cell (n, n) tensor on edges, averaged over cofaces.

    leg="normal" gives a stress-like (n-1)-form Σ·rot(t); leg="tangent" gives
    a 1-form Σ·t (strain-like storage).
    """
    if leg not in ("normal", "tangent"):
        raise ValueError(f"leg must be 'normal' or 'tangent', got '{leg}'")
    t = complex_.edge_vectors()
    vec = rot(t) if leg == "normal" else t
    vals = np.einsum("eab,eb->ea", _edge_average(cells, complex_), vec)
    degree = complex_.dim - 1 if leg == "normal" else 1
    return TensorValuedForm.from_array("covector", degree, vals, complex_, symmetric=symmetric, cells=cells, leg=leg)


def vector_one_form(v, cells: np.ndarray | None = None, complex_: SimplicialComplex | None = None) -> TensorValuedForm:
    """∇v as a vector-valued 1-form: component a is d(v^a)."""
    if isinstance(v, TensorValuedForm):
        complex_ = v.complex
    vv = vertex_vectors(v)
    comps = tuple(exterior_derivative(Form(0, vv[:, a], complex_)) for a in range(complex_.dim))
    return TensorValuedForm("vector", comps, cells=cells, leg="tangent")


def partial_trace(sigma: TensorValuedForm, component: str) -> BoundaryField:
    """Restrict the form leg to a boundary component and keep the value leg."""
    cx = sigma.complex
    comp = cx.component(component)
    head = sigma.components[0]
    if head.dual or head.component is not None:
        raise FormError("partial trace takes primal tensor-valued forms on the domain")
    arr = sigma.array()
    if sigma.valence == "vector" and sigma.degree == 0:
        return BoundaryField(component, "vector", 0, arr[comp.vertices], cx)
    if sigma.valence == "covector" and sigma.degree == cx.dim - 1 and sigma.leg == "normal":
        return BoundaryField(component, "covector", cx.dim - 1, arr[comp.cells] * comp.orientation[:, None], cx)
    raise ValenceMismatchError(
        f"partial trace needs a covector-valued (n-1)-form or a vector-valued 0-form, "
        f"got {sigma.valence} degree {sigma.degree} on the {sigma.leg} leg"
    )


def boundary_vectors(values: np.ndarray, complex_: SimplicialComplex, component: str) -> BoundaryField:
    """Wrap per-vertex vectors given on a component as a vector-valued boundary 0-form."""
    return BoundaryField(component, "vector", 0, values, complex_)


def _order(a, b):
    if a.valence == "covector" and b.valence == "vector":
        return a, b
    if a.valence == "vector" and b.valence == "covector":
        return b, a
    raise ValenceMismatchError(f"∧̇ pairs a covector- with a vector-valued form, got {a.valence} and {b.valence}")


def dot_wedge(a, b) -> Form:
    """Value-contracting wedge.

    On a boundary component: Σ_a σ_a(cell)·ν̄^a(cell). In the domain, a
    covector (n-1)-form with a vector 0-form gives the contraction on edges;
    a covector (n-1)-form with a vector 1-form (both carrying cell tensors)
    gives the top form |T|·Σ:G.
    """
    sigma, nu = _order(a, b)
    if isinstance(sigma, BoundaryField) != isinstance(nu, BoundaryField):
        raise FormError("∧̇ operands must both live on the boundary or both in the domain")
    if isinstance(sigma, BoundaryField):
        if sigma.component != nu.component or sigma.complex is not nu.complex:
            raise FormError(f"∧̇ operands live on '{sigma.component}' and '{nu.component}'")
        n = sigma.complex.dim
        if sigma.degree != n - 1 or nu.degree != 0:
            raise FormError("boundary ∧̇ is provided for covector (n-1)-forms with vector 0-forms")
        nu_bar = nu.cell_average()
        vals = sigma.values[:, 0] * nu_bar[:, 0]
        for i in range(1, n):
            vals = vals + sigma.values[:, i] * nu_bar[:, i]
        return Form(n - 1, vals, sigma.complex, component=sigma.component)

    cx = sigma.complex
    if nu.complex is not cx:
        raise FormError("∧̇ of forms on different complexes")
    n = cx.dim
    if sigma.degree != n - 1:
        raise FormError("in-domain ∧̇ needs a covector-valued (n-1)-form")
    if nu.degree == 0:
        vv = nu.array()
        e = cx.simplices[1]
        nu_bar = 0.5 * (vv[e[:, 0]] + vv[e[:, 1]])
        s = sigma.array()
        vals = s[:, 0] * nu_bar[:, 0]
        for i in range(1, n):
            vals = vals + s[:, i] * nu_bar[:, i]
        return Form(n - 1, vals, cx)
    if nu.degree == 1:
        if sigma.cells is None or nu.cells is None:
            raise FormError("∧̇ of an (n-1)-form with a 1-form needs cell tensors on both operands")
        area = cx.primal_measures[n]
        return Form(n, area * np.einsum("fab,fab->f", sigma.cells, nu.cells), cx)
    raise FormError(f"∧̇ with a vector-valued {nu.degree}-form is not provided")


def scalar_boundary_port(density: Form, u, component: str) -> Tuple[Form, Form]:
    """First moving-boundary representation: e_u = tr(⋆ℋ), f_u = tr(⋆u♭).

    `density` is ⋆ℋ sampled at vertices; the pair is paired by the boundary
    wedge and equals ptr(ℋ)∧̇ptr(u) for the covector representation of the
    same vertex density.
    """
    if density.degree != 0 or density.dual or density.component is not None:
        raise FormError("⋆ℋ must be given as a primal 0-form")
    cx = density.complex
    comp = cx.component(component)
    e_u = Form(0, density.values[comp.vertices], cx, component=component)
    flux = star_flat(vertex_vectors(u), cx).values
    f_u = Form(cx.dim - 1, flux[comp.cells] * comp.orientation, cx, component=component)
    return e_u, f_u


def vector_boundary_port(density: Form, u, component: str) -> Tuple[BoundaryField, BoundaryField]:
    """Second representation: e_u = ptr(ℋ), f_u = ptr(u), paired by ∧̇."""
    cx = density.complex
    e_u = partial_trace(covector_from_vertex_density(density), component)
    f_u = partial_trace(vector_field(vertex_vectors(u), cx), component)
    return e_u, f_u
