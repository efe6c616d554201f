"""Viscous stress: velocity gradient, ℒ_v g, the shear and bulk stress forms."""
from __future__ import annotations

import numpy as np

from forms.cochain import FormError, TensorValuedForm
from forms.operators import integrate, vertex_vectors
from forms.tensor import covector_from_cell_tensor, dot_wedge, vector_one_form
from fluid.state import FluidParams, FluidState, vertex_velocity
from mesh.complex import SimplicialComplex


def velocity_gradient(v, complex_: SimplicialComplex) -> np.ndarray:
    """Per-cell gradient G_ij = ∂_j v^i of the piecewise linear interpolant.

    Exact for affine fields.
    """
    vv = vertex_vectors(v)
    cells = complex_.simplices[complex_.dim]
    rel = complex_.local_coordinates(complex_.dim)[:, 1:, :]   # (F, n, n) rows = edges
    dv = vv[cells[:, 1:]] - vv[cells[:, :1]]                    # (F, n, n) rows = Δv
    try:
        # Δv_k = G · e_k  =>  dvᵀ = G relᵀ
        return np.transpose(np.linalg.solve(rel, dv), (0, 2, 1))
    except np.linalg.LinAlgError:
        raise FormError("degenerate cell in velocity gradient") from None


def strain_rate(grad: np.ndarray) -> np.ndarray:
    """(ℒ_v g)_ij = ∂_j v^i + ∂_i v^j."""
    return grad + np.transpose(grad, (0, 2, 1))


def lie_metric_form(v, complex_: SimplicialComplex) -> TensorValuedForm:
    """ℒ_v g stored as a symmetric covector-valued 1-form."""
    return covector_from_cell_tensor(strain_rate(velocity_gradient(v, complex_)), complex_, leg="tangent", symmetric=True)


def shear_stress_field(v, complex_: SimplicialComplex, kappa: float) -> TensorValuedForm:
    """𝒯_κ = κ ⋆(ℒ_v g) as a covector-valued (n-1)-form."""
    sigma = kappa * strain_rate(velocity_gradient(v, complex_))
    return covector_from_cell_tensor(sigma, complex_, leg="normal", symmetric=True)


def rate_field(v, complex_: SimplicialComplex) -> TensorValuedForm:
    """f_r = ∇v as a vector-valued 1-form."""
    return vector_one_form(vertex_vectors(v), velocity_gradient(v, complex_), complex_)


def shear_stress(state: FluidState, params: FluidParams) -> TensorValuedForm:
    return shear_stress_field(vertex_velocity(state), state.complex, params.kappa)


def bulk_stress(state: FluidState, params: FluidParams) -> TensorValuedForm:
    """𝒯_λ = λ div(v) ⋆δ; inactive in the momentum balance."""
    cx = state.complex
    grad = velocity_gradient(vertex_velocity(state), cx)
    div = np.trace(grad, axis1=1, axis2=2)
    cells = params.lam * div[:, None, None] * np.eye(cx.dim)[None, :, :]
    return covector_from_cell_tensor(cells, cx, leg="normal", symmetric=True)


def dissipation_field(v, complex_: SimplicialComplex, kappa: float) -> float:
    """∫ e_r ∧̇ f_r = (κ/2) Σ |ℒ_v g|² |T| >= 0."""
    return integrate(dot_wedge(shear_stress_field(v, complex_, kappa), rate_field(v, complex_)))


def dissipation_rate(state: FluidState, params: FluidParams) -> float:
    return dissipation_field(vertex_velocity(state), state.complex, params.kappa)


def resistive_port(state: FluidState, params: FluidParams):
    """(e_r, f_r) = (𝒯_κ, ∇v)."""
    vv = vertex_velocity(state)
    return shear_stress_field(vv, state.complex, params.kappa), rate_field(vv, state.complex)
