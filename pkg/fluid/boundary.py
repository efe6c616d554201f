"""Boundary ports of the fluid on a moving domain.

Efforts are covector-valued boundary (n-1)-forms, flows vector-valued
boundary 0-forms; each pair is evaluated with ∧̇. On the body boundary the
component convention is -1, so partial traces there use normals pointing
out of the body.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

from forms.cochain import BoundaryField, Form, TensorValuedForm
from forms.operators import pair, trace, vector_field
from forms.tensor import covector_from_vertex_density, dot_wedge, partial_trace
from fluid.state import FluidParams, FluidState, coenergy, kinetic_density, velocity_field
from fluid.stress import shear_stress
from ports.port import PairingKind, PowerPort, pair_power


def kinetic_covector(state: FluidState) -> TensorValuedForm:
    """ℋ_f in its covector-valued (n-1)-form representation."""
    return covector_from_vertex_density(kinetic_density(state))


def pressure_covector(state: FluidState) -> TensorValuedForm:
    """⋆p as a covector-valued (n-1)-form."""
    return covector_from_vertex_density(state.p)


def total_stress(state: FluidState, params: FluidParams) -> TensorValuedForm:
    """𝒯 = -⋆p + 𝒯_κ."""
    return shear_stress(state, params) - pressure_covector(state)


def _ptr_vertices(values: np.ndarray, state: FluidState, component: str) -> BoundaryField:
    return partial_trace(vector_field(values, state.complex), component)


@dataclass(frozen=True)
class BoundaryPorts:
    component: str
    ports: Dict[str, PowerPort]

    def powers(self) -> Dict[str, float]:
        return {name: pair_power(port) for name, port in self.ports.items()}

    def total(self) -> float:
        return float(sum(self.powers().values()))


def boundary_ports(
    state: FluidState,
    params: FluidParams,
    u: np.ndarray | None,
    component: str,
    side: str = "fluid",
) -> BoundaryPorts:
    """Ports on a body boundary (side="body": e_∂1, e_∂2) or an outer one (side="fluid": e_∂3).

    `u` is the mesh velocity at all vertices (None for a fixed mesh).
    """
    cx = state.complex
    u = np.zeros((cx.n_cells(0), cx.dim)) if u is None else np.asarray(u, dtype=float)
    h = partial_trace(kinetic_covector(state), component)
    t_minus_h = partial_trace(total_stress(state, params) - kinetic_covector(state), component)
    v = partial_trace(velocity_field(state), component)
    kind = PairingKind.BOUNDARY_DOT
    if side == "body":
        ports = {
            "e_d1": PowerPort("e_d1", -h, _ptr_vertices(u, state, component), kind),
            "e_d2": PowerPort("e_d2", -t_minus_h, v, kind),
        }
    elif side == "fluid":
        ports = {"e_d3": PowerPort("e_d3", t_minus_h, v, kind)}
    else:
        raise ValueError(f"side must be 'body' or 'fluid', got '{side}'")
    return BoundaryPorts(component, ports)


def advection_flux(state: FluidState, component: str) -> Form:
    """tr(ι_v ℋ) on the component: contraction in the domain, then the trace."""
    contracted = dot_wedge(kinetic_covector(state), velocity_field(state))
    return trace(contracted, component)


def relative_flux(state: FluidState, u: np.ndarray, component: str) -> Form:
    """ptr(ℋ) ∧̇ ptr(v - u): advective energy flux through a boundary moving with u."""
    vv = velocity_field(state).array()
    rel = _ptr_vertices(vv - np.asarray(u, dtype=float), state, component)
    return dot_wedge(partial_trace(kinetic_covector(state), component), rel)


def storage_power(state: FluidState, rate: Form) -> float:
    """∫ δ_ṽH ∧ ∂_tṽ on a fixed mesh."""
    dv_h, _ = coenergy(state)
    return pair(dv_h, rate)


def boundary_power(state: FluidState, params: FluidParams, u, component: str, side: str) -> float:
    return boundary_ports(state, params, u, component, side).total()
