"""Reconstruction map φ_t (twist -> wall velocity) and its dual φ*_t (traction -> wrench)."""
from __future__ import annotations

import numpy as np

from forms.cochain import BoundaryField, FormError, ValenceMismatchError
from mesh.complex import SimplicialComplex, boundary_measure
from ports.junction import ModulatedTransformer
from rigidbody.se3 import INERTIAL, Pose, Twist, Wrench, require_frame, twist_to_inertial, wrench_to_body


def lift(points: np.ndarray) -> np.ndarray:
    """Embed planar points in R^3 (z = 0)."""
    points = np.asarray(points, dtype=float)
    if points.shape[1] == 3:
        return points
    return np.column_stack([points, np.zeros(len(points))])


def boundary_points(complex_: SimplicialComplex, component: str) -> np.ndarray:
    return lift(complex_.vertices[complex_.component(component).vertices])


def reconstruct(twist: Twist, complex_: SimplicialComplex, component: str) -> BoundaryField:
    """γ_∂(q) = ω × q + v at each vertex of the component (inertial twist)."""
    require_frame(twist, INERTIAL)
    q = boundary_points(complex_, component)
    gamma = np.cross(twist.omega, q) + twist.v
    return BoundaryField(component, "vector", 0, gamma[:, : complex_.dim], complex_)


def reconstruct_body_frame(h: Pose, twist: Twist, complex_: SimplicialComplex, component: str) -> BoundaryField:
    """γ = R(ω^b × Rᵀ(q - ξ)) + R v^b, the same field written with the body twist."""
    q = boundary_points(complex_, component)
    local = (q - h.xi) @ h.R
    gamma = np.cross(twist.omega, local) @ h.R.T + h.R @ twist.v
    return BoundaryField(component, "vector", 0, gamma[:, : complex_.dim], complex_)


def wrench_from_traction(alpha: BoundaryField) -> Wrench:
    """φ*_t: W^v with ⟨W|T⟩ = ∫ α ∧̇ φ_t(T) for every inertial twist T."""
    if alpha.valence != "covector" or alpha.degree != alpha.complex.dim - 1:
        raise ValenceMismatchError("traction must be a covector-valued (n-1)-form on the boundary")
    cx = alpha.complex
    q = lift(cx.vertices[alpha.comp.vertices])
    q_bar = q[alpha.comp.cell_vertices].mean(axis=1)
    traction = lift(alpha.values)
    force = traction.sum(axis=0)
    torque = np.cross(q_bar, traction).sum(axis=0)
    return Wrench(np.concatenate([torque, force]), INERTIAL)


def wrench_from_stress(
    pressure: np.ndarray,
    stress: np.ndarray,
    complex_: SimplicialComplex,
    component: str,
) -> Wrench:
    """f = ∮ (-pI + Σ) n dA, τ = ∮ q × ((-pI + Σ) n) dA with per-cell p and Σ.

    n points out of the body for a component with convention -1.
    """
    measure, normal = boundary_measure(complex_, component)
    comp = complex_.component(component)
    n = complex_.dim
    if pressure.shape != (len(comp),) or stress.shape != (len(comp), n, n):
        raise FormError("pressure and stress must be given per boundary cell")
    sigma = stress - pressure[:, None, None] * np.eye(n)[None, :, :]
    traction = lift(np.einsum("cab,cb->ca", sigma, normal) * measure[:, None])
    q = lift(complex_.vertices[comp.vertices])
    q_bar = q[comp.cell_vertices].mean(axis=1)
    return Wrench(np.concatenate([np.cross(q_bar, traction).sum(axis=0), traction.sum(axis=0)]), INERTIAL)


def body_transformer(h: Pose, complex_: SimplicialComplex, component: str, t: float) -> ModulatedTransformer:
    """Ad_h followed by φ_t, modulated by the pose and boundary at time t.

    forward: body twist -> wall velocity field; dual: traction -> body wrench.
    """
    def forward(twist: Twist) -> BoundaryField:
        return reconstruct(twist_to_inertial(h, twist), complex_, component)

    def dual(alpha: BoundaryField) -> Wrench:
        return wrench_to_body(h, wrench_from_traction(alpha))

    return ModulatedTransformer(f"body:{component}", forward, dual, t)
