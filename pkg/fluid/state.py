from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Tuple

import numpy as np

from forms.cochain import Form, FormError, TensorValuedForm, zero_form
from forms.operators import flat, flat_field, hodge_ratio, interior_product, sharp, vector_field
from mesh.complex import SimplicialComplex


@dataclass(frozen=True)
class FluidParams:
    kappa: float = 0.0
    rho: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        if self.kappa < 0.0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if self.lam < 0.0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")

    @property
    def nu(self) -> float:
        return self.kappa / self.rho


@dataclass(frozen=True)
class VelocityBC:
    """Dirichlet vertex velocities per boundary component.

    Components are applied in insertion order, so a later entry wins on
    shared corner vertices.
    """
    values: Dict[str, np.ndarray] = field(default_factory=dict)

    def with_component(self, tag: str, values: np.ndarray) -> "VelocityBC":
        return VelocityBC({**self.values, tag: np.asarray(values, dtype=float)})

    def vertex_values(self, complex_: SimplicialComplex) -> Tuple[np.ndarray, np.ndarray]:
        ids, vals = [], []
        for tag, v in self.values.items():
            comp = complex_.component(tag)
            v = np.asarray(v, dtype=float)
            if v.ndim == 1:
                v = np.broadcast_to(v, (len(comp.vertices), complex_.dim))
            if v.shape != (len(comp.vertices), complex_.dim):
                raise ValueError(f"velocity for '{tag}' must have shape {(len(comp.vertices), complex_.dim)}, got {v.shape}")
            ids.append(comp.vertices)
            vals.append(v)
        if not ids:
            return np.zeros(0, dtype=np.int64), np.zeros((0, complex_.dim))
        ids_all, vals_all = np.concatenate(ids), np.concatenate(vals)
        uniq, first = np.unique(ids_all[::-1], return_index=True)
        return uniq, vals_all[::-1][first]

    @staticmethod
    def walls(complex_: SimplicialComplex) -> "VelocityBC":
        """No-slip on every boundary component."""
        return VelocityBC({tag: np.zeros(complex_.dim) for tag in complex_.components})


@dataclass(frozen=True)
class FluidState:
    """x_f = (ṽ, μ) with the pressure p of the last projection.

    ṽ is a primal 1-form, μ = ρ·(dual vertex areas) a dual 2-form, p a
    vertex 0-form. `bc` holds the Dirichlet data the state satisfies.
    """
    v: Form
    mu: Form
    p: Form
    t: float = 0.0
    bc: VelocityBC = field(default_factory=VelocityBC)

    def __post_init__(self):
        cx = self.v.complex
        if self.v.degree != 1 or self.v.dual:
            raise FormError("velocity must be a primal 1-form")
        if self.mu.degree != cx.dim or not self.mu.dual or self.mu.complex is not cx:
            raise FormError("mass must be a dual top form on the velocity complex")
        if self.p.degree != 0 or self.p.dual or self.p.complex is not cx:
            raise FormError("pressure must be a primal 0-form on the velocity complex")
        if np.any(self.mu.values <= 0.0):
            raise ValueError("mass form must be positive")

    @property
    def complex(self) -> SimplicialComplex:
        return self.v.complex

    def density(self) -> np.ndarray:
        """⋆μ at vertices."""
        return self.mu.values / self.complex.dual_measures[0]


def mass_form(complex_: SimplicialComplex, rho: float) -> Form:
    return Form(complex_.dim, rho * complex_.dual_measures[0], complex_, dual=True)


def initial_state(
    complex_: SimplicialComplex,
    params: FluidParams,
    velocity: Callable[[np.ndarray], np.ndarray] | np.ndarray | None = None,
    bc: VelocityBC | None = None,
    t: float = 0.0,
) -> FluidState:
    """Unprojected state from an analytic field (Simpson ♭) or vertex vectors."""
    if velocity is None:
        v = zero_form(complex_, 1)
    elif callable(velocity):
        v = flat_field(velocity, complex_)
    else:
        v = flat(np.asarray(velocity, dtype=float), complex_)
    return FluidState(v, mass_form(complex_, params.rho), zero_form(complex_, 0), t, bc or VelocityBC())


def on_complex(state: FluidState, complex_: SimplicialComplex, params: FluidParams) -> FluidState:
    """Carry the cochain values over to a moved complex with the same topology."""
    if complex_.topology is not state.complex.topology:
        raise FormError("cochains can only be carried between complexes sharing a topology")
    return replace(
        state,
        v=Form(1, state.v.values, complex_),
        mu=mass_form(complex_, params.rho),
        p=Form(0, state.p.values, complex_),
    )


def vertex_velocity(state: FluidState) -> np.ndarray:
    """♯ṽ with the Dirichlet data imposed at boundary vertices."""
    vv = sharp(state.v).array()
    ids, vals = state.bc.vertex_values(state.complex)
    vv[ids] = vals
    return vv


def edge_density(state: FluidState) -> np.ndarray:
    rho = state.density()
    e = state.complex.simplices[1]
    return 0.5 * (rho[e[:, 0]] + rho[e[:, 1]])


def hamiltonian_f(state: FluidState) -> float:
    """H_f = ∫ ½ (⋆μ) ṽ ∧ ⋆ṽ."""
    star1 = hodge_ratio(state.complex, 1)
    return float(0.5 * np.sum(edge_density(state) * state.v.values ** 2 * star1))


def coenergy(state: FluidState) -> Tuple[Form, Form]:
    """(δ_ṽH, δ_μH) = ((⋆μ)⋆ṽ, ½ ι_v ṽ)."""
    cx = state.complex
    dv = Form(1, edge_density(state) * state.v.values * hodge_ratio(cx, 1), cx, dual=True)
    vv = vertex_velocity(state)
    return dv, 0.5 * interior_product(vv, state.v)


def kinetic_density(state: FluidState) -> Form:
    """⋆ℋ_f = ½ρ|v|² at vertices."""
    vv = vertex_velocity(state)
    return Form(0, 0.5 * state.density() * np.sum(vv * vv, axis=1), state.complex)


def velocity_field(state: FluidState) -> TensorValuedForm:
    return vector_field(vertex_velocity(state), state.complex)
