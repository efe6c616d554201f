"""Covariant incompressible Navier-Stokes on a (possibly moving) simplicial mesh.

Velocity is the primal 1-form ṽ; pressure lives on vertices and is the
Lagrange multiplier of the discrete divergence
    div(ṽ)_v = -(∂₁ ⋆ṽ)_v + b_v,
where b_v is the Dirichlet normal flux through the half boundary edges of v.
Boundary edges are Dirichlet: their values come from the vertex data and are
never corrected by the projection.

`FluidSolver` advances with a linearly implicit midpoint rule. The viscous
operator K = κ d₁ᵀ⋆₂d₁ is symmetric and the rotational advection operator A
is skew, so the change of H_f over a step splits exactly into dissipation,
boundary power per component and mesh transport (`StepPowers`).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Dict, List, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from loguru import logger

from forms.cochain import Form, zero_form
from forms.operators import (
    exterior_derivative,
    hodge_ratio,
    hodge_star,
    interior_product,
    lie_derivative,
    star_flat,
    whitney_sharp_matrix,
)
from fluid.state import (
    FluidParams,
    FluidState,
    VelocityBC,
    coenergy,
    edge_density,
    hamiltonian_f,
    on_complex,
    vertex_velocity,
)
from mesh.complex import SimplicialComplex


class IncompatibleFluxError(ValueError):
    pass


class DivergenceError(RuntimeError):
    pass


def complete_bc(complex_: SimplicialComplex, bc: VelocityBC | None) -> VelocityBC:
    """No-slip on every component the BC leaves out, then the given entries in order."""
    given = dict(bc.values) if bc is not None else {}
    for tag in given:
        complex_.component(tag)
    walls = {tag: np.zeros(complex_.dim) for tag in complex_.components if tag not in given}
    return VelocityBC({**walls, **given})


def _boundary_vertex_field(complex_: SimplicialComplex, bc: VelocityBC) -> np.ndarray:
    g = np.zeros((complex_.n_cells(0), complex_.dim))
    ids, vals = bc.vertex_values(complex_)
    g[ids] = vals
    return g


def boundary_edges(complex_: SimplicialComplex) -> np.ndarray:
    return complex_.topology.boundary_cells


def impose_bc(v: Form, bc: VelocityBC) -> Form:
    """Overwrite boundary edge values with ♭ of the Dirichlet vertex data."""
    cx = v.complex
    edges = boundary_edges(cx)
    if len(edges) == 0:
        return v
    g = _boundary_vertex_field(cx, bc)
    e = cx.simplices[1][edges]
    mid = 0.5 * (g[e[:, 0]] + g[e[:, 1]])
    vals = v.values.copy()
    vals[edges] = np.sum(mid * cx.edge_vectors()[edges], axis=1)
    return v.like(vals)


def boundary_flux(complex_: SimplicialComplex, bc: VelocityBC) -> np.ndarray:
    """Outward Dirichlet flux per vertex, half of each adjacent boundary edge."""
    b = np.zeros(complex_.n_cells(0))
    edges = boundary_edges(complex_)
    if len(edges) == 0:
        return b
    g = _boundary_vertex_field(complex_, bc)
    flux = star_flat(g, complex_).values[edges] * complex_.topology.boundary_signs
    e = complex_.simplices[1][edges]
    np.add.at(b, e[:, 0], 0.5 * flux)
    np.add.at(b, e[:, 1], 0.5 * flux)
    return b


def _check_compatible(b: np.ndarray) -> None:
    net = float(np.sum(b))
    if abs(net) > 1e-12 * max(1.0, float(np.sum(np.abs(b)))):
        raise IncompatibleFluxError(f"net boundary flux {net:.3e} is not zero; check the velocity boundary data")


def divergence(v: Form, b: np.ndarray | None = None) -> np.ndarray:
    """Net outflow of each dual vertex cell: d⋆ṽ plus the boundary flux."""
    cx = v.complex
    out = -(cx.incidence(1).astype(float) @ (hodge_ratio(cx, 1) * v.values))
    return out if b is None else out + b


def _constrained_vertices(complex_: SimplicialComplex) -> Tuple[np.ndarray, np.ndarray]:
    """Interior edge mask and the vertices whose divergence is enforced.

    Vertex 0 is pinned, as is any vertex without an interior edge of
    positive dual length.
    """
    def build():
        d0 = complex_.incidence(1).astype(float).tocsr()
        free = np.ones(complex_.n_cells(1))
        free[boundary_edges(complex_)] = 0.0
        diag = np.asarray(abs(d0) @ (hodge_ratio(complex_, 1) * free)).ravel()
        scale = float(np.max(diag)) if len(diag) else 1.0
        pinned = diag <= 1e-14 * scale
        pinned[0] = True
        return free, np.flatnonzero(~pinned)

    return complex_.memo("constrained_vertices", build)


def _pressure_system(complex_: SimplicialComplex):
    def build():
        free, keep = _constrained_vertices(complex_)
        d0 = complex_.incidence(1).astype(float).tocsr()
        lap = (d0 @ sp.diags(hodge_ratio(complex_, 1) * free) @ d0.T).tocsr()
        lu = splu(lap[keep][:, keep].tocsc())
        return free, keep, lu

    return complex_.memo("pressure_system", build)


def pressure_project(v_star: Form, bc: VelocityBC | None, dt: float, rho: float) -> Tuple[Form, Form]:
    """Remove the gradient part of ṽ*: ṽ = ṽ* - (dt/ρ) dp on interior edges.

    Solves ∂₁⋆M∂₁ᵀ p = (ρ/dt)(∂₁⋆ṽ* - b) with vertex 0 pinned, then shifts p
    to zero mean.
    """
    cx = v_star.complex
    if dt <= 0.0:
        raise ValueError(f"projection needs dt > 0, got {dt}")
    full = complete_bc(cx, bc)
    v_star = impose_bc(v_star, full)
    b = boundary_flux(cx, full)
    _check_compatible(b)

    free, keep, lu = _pressure_system(cx)
    rhs = (rho / dt) * (-divergence(v_star, b))
    p = np.zeros(cx.n_cells(0))
    p[keep] = lu.solve(rhs[keep])
    grad = cx.incidence(1).astype(float).T @ p
    v = v_star.like(v_star.values - (dt / rho) * free * grad)
    p -= p.mean()
    return v, Form(0, p, cx)


def fluid_rhs(state: FluidState, params: FluidParams, u: np.ndarray | None = None) -> Tuple[Form, Form]:
    """(∂ṽ/∂t, ∂μ/∂t) without the pressure term.

    ∂ṽ/∂t = -d(½|v|²) - ι_v dṽ + ν ⋆d⋆dṽ, plus ℒ_u ṽ when the mesh moves
    with vertex velocity u.
    """
    cx = state.complex
    vv = vertex_velocity(state)
    kinetic = Form(0, 0.5 * np.sum(vv * vv, axis=1), cx)
    curl = exterior_derivative(state.v)
    rate = -exterior_derivative(kinetic) - interior_product(vv, curl)
    if params.nu > 0.0:
        rate = rate + params.nu * hodge_star(exterior_derivative(hodge_star(curl)))
    if u is not None and np.any(u):
        rate = rate + lie_derivative(np.asarray(u, dtype=float), state.v)

    dv_h, _ = coenergy(state)
    b = boundary_flux(cx, complete_bc(cx, state.bc))
    mass_rate = -(exterior_derivative(dv_h).values + state.density() * b)
    return rate, Form(cx.dim, mass_rate, cx, dual=True)


def viscous_operator(complex_: SimplicialComplex, kappa: float) -> sp.csr_matrix:
    """K = κ d₁ᵀ ⋆₂ d₁, symmetric positive semidefinite on primal 1-forms."""
    d1 = complex_.incidence(2).astype(float).T.tocsr()
    return (kappa * (d1.T @ sp.diags(1.0 / complex_.primal_measures[2]) @ d1)).tocsr()


def advection_operator(complex_: SimplicialComplex, vorticity: np.ndarray, rho: float) -> sp.csr_matrix:
    """A = ρ Sᵀ diag(|T| ω) R S with S the Whitney ♯ at barycenters.

    R maps t to (t_y, -t_x), so Aṽ is the weak form of -ρ ι_v dṽ and A is
    skew-symmetric.
    """
    n = complex_.dim
    s = whitney_sharp_matrix(complex_)
    w = complex_.primal_measures[n] * vorticity
    idx = np.arange(len(w))
    rot = sp.csr_matrix(
        (np.concatenate([w, -w]), (np.concatenate([n * idx, n * idx + 1]), np.concatenate([n * idx + 1, n * idx]))),
        shape=(n * len(w), n * len(w)),
    )
    return (rho * (s.T @ rot @ s)).tocsr()


def _owners(complex_: SimplicialComplex) -> Tuple[List[str], np.ndarray, np.ndarray]:
    """Component index of each edge and vertex, -1 in the interior.

    Shared corner vertices belong to the later component.
    """
    def build():
        names = list(complex_.components)
        edge_owner = -np.ones(complex_.n_cells(1), dtype=np.int64)
        vertex_owner = -np.ones(complex_.n_cells(0), dtype=np.int64)
        for i, comp in enumerate(complex_.components.values()):
            edge_owner[comp.cells] = i
            vertex_owner[comp.vertices] = i
        return names, edge_owner, vertex_owner

    return complex_.memo("owners", build)


@dataclass(frozen=True)
class StepPowers:
    """Interval powers of one fluid step.

    stored = (H_f(t+dt) - H_f(t))/dt; `boundary` holds the power entering
    through each component, `transport` what the moving mesh and the
    interior vertex terms carry. stored + dissipation equals the supply up
    to round-off.
    """
    dt: float
    stored: float = 0.0
    dissipation: float = 0.0
    boundary: Dict[str, float] = field(default_factory=dict)
    transport: float = 0.0

    def supplied(self) -> float:
        return float(sum(self.boundary.values()) + self.transport)

    def residual(self) -> float:
        return self.stored + self.dissipation - self.supplied()


class FluidSolver:
    """Linearly implicit midpoint step with the pressure as a Lagrange multiplier.

    Interior edges solve
        M̄ (ṽ¹ - ṽ⁰)/dt = (A - K) v̄ - M̄ d k + M̄ ℒ_u ṽ⁰ - ⋆₁ d p,   ∂₁⋆₁ṽ¹ = b¹,
    with v̄ the midpoint, M̄ the mean mass of both meshes, and the vorticity
    in A and the kinetic density k taken from an explicit half-step predictor.
    """

    def __init__(self, params: FluidParams):
        self.params = params
        self.DIV_TOL = float(os.getenv("PORTFLOW_DIV_TOL", "1e-10"))
        self.CFL_MAX = float(os.getenv("PORTFLOW_CFL_MAX", "1.0"))

    def cfl(self, state: FluidState, dt: float) -> float:
        vv = vertex_velocity(state)
        h = float(np.min(state.complex.primal_measures[1]))
        return float(np.max(np.linalg.norm(vv, axis=1), initial=0.0)) * dt / h

    def _predict(self, state: FluidState, dt: float, u) -> FluidState:
        rate, _ = fluid_rhs(state, self.params, u)
        return replace(state, v=impose_bc(state.v + rate * (0.5 * dt), state.bc))

    def advance(
        self,
        state: FluidState,
        dt: float,
        bc: VelocityBC | None = None,
        moved: SimplicialComplex | None = None,
        u: np.ndarray | None = None,
    ) -> Tuple[FluidState, StepPowers]:
        """Advance by dt onto `moved` (same topology), or in place when it is None.

        `u` is the mesh velocity over the step. Returns the new state on the
        new mesh and the exact power split of the step.
        """
        if dt < 0.0:
            raise ValueError(f"dt must be >= 0, got {dt}")
        if dt == 0.0:
            return state, StepPowers(0.0)
        params = self.params
        cx0 = state.complex
        cx = cx0 if moved is None else moved
        full = complete_bc(cx, bc if bc is not None else state.bc)
        carried = on_complex(state, cx, params) if moved is not None else state
        carried = replace(carried, bc=full)
        courant = self.cfl(carried, dt)
        if courant > self.CFL_MAX:
            logger.warning(f"CFL number {courant:.2f} above {self.CFL_MAX} at t={state.t:.4f}")

        b1 = boundary_flux(cx, full)
        _check_compatible(b1)
        free, keep = _constrained_vertices(cx)
        interior = np.flatnonzero(free)
        wall = boundary_edges(cx)
        star1 = hodge_ratio(cx, 1)
        inc = cx.incidence(1).astype(float).tocsr()

        v0 = state.v.values
        v1 = impose_bc(carried.v, full).values.copy()
        m0 = edge_density(state) * hodge_ratio(cx0, 1)
        m1 = edge_density(carried) * star1
        mbar = 0.5 * (m0 + m1)

        pred = self._predict(carried, dt, u)
        vorticity = exterior_derivative(pred.v).values / cx.primal_measures[cx.dim]
        vp = vertex_velocity(pred)
        k = 0.5 * np.sum(vp * vp, axis=1)

        adv = advection_operator(cx, vorticity, params.rho)
        visc = viscous_operator(cx, params.kappa)
        lin = (adv - visc).tocsr()
        force = -mbar * (inc.T @ k)
        ale = np.zeros_like(v0)
        if u is not None and np.any(u):
            ale = mbar * lie_derivative(np.asarray(u, dtype=float), carried.v).values
        force = force + ale

        grad = (sp.diags(star1) @ inc.T).tocsr()[interior][:, keep]
        lin_i = lin[interior]
        top = sp.diags(mbar[interior] / dt) - 0.5 * lin_i[:, interior]
        system = sp.bmat([[top, grad], [grad.T, None]]).tocsc()
        rhs_top = (
            mbar[interior] / dt * v0[interior]
            + 0.5 * (lin_i @ v0)
            + 0.5 * (lin_i[:, wall] @ v1[wall])
            + force[interior]
        )
        div_op = (inc @ sp.diags(star1)).tocsr()[keep]
        rhs_bot = b1[keep] - div_op[:, wall] @ v1[wall]
        x = splu(system).solve(np.concatenate([rhs_top, rhs_bot]))
        v1[interior] = x[: len(interior)]
        p = np.zeros(cx.n_cells(0))
        p[keep] = x[len(interior):]
        p -= p.mean()

        new = replace(carried, v=Form(1, v1, cx), p=Form(0, p, cx), t=state.t + dt)
        residual = float(np.max(np.abs(divergence(new.v, b1)), initial=0.0))
        if residual > self.DIV_TOL:
            raise DivergenceError(f"divergence {residual:.3e} above {self.DIV_TOL:.0e} after projection at t={state.t:.4f}")

        powers = self._powers(state, new, dt, v0, mbar, adv, visc, k, ale)
        logger.debug(
            f"Fluid step t={new.t:.4f} div={residual:.2e} cfl={courant:.2f} "
            f"power residual={powers.residual():.2e}"
        )
        return new, powers

    def _powers(self, old, new, dt, v0, mbar, adv, visc, k, ale) -> StepPowers:
        cx = new.complex
        v1 = new.v.values
        vbar = 0.5 * (v0 + v1)
        free, _ = _constrained_vertices(cx)
        inc = cx.incidence(1).astype(float).tocsr()
        names, edge_owner, vertex_owner = _owners(cx)

        circ = exterior_derivative(Form(1, vbar, cx)).values
        dissipation = float(self.params.kappa * np.sum(circ ** 2 / cx.primal_measures[cx.dim]))
        edge_term = mbar * vbar * (v1 - v0) / dt - vbar * (adv @ vbar) + vbar * (visc @ vbar)
        vertex_term = -k * (inc @ (free * mbar * vbar)) - new.p.values * (inc @ (free * hodge_ratio(cx, 1) * vbar))

        boundary = {}
        for i, tag in enumerate(names):
            boundary[tag] = float(np.sum(edge_term[edge_owner == i]) + np.sum(vertex_term[vertex_owner == i]))
        m0 = edge_density(old) * hodge_ratio(old.complex, 1)
        m1 = edge_density(new) * hodge_ratio(cx, 1)
        geometric = 0.25 * float(np.sum((m1 - m0) * (v1 ** 2 + v0 ** 2))) / dt
        transport = float(np.sum(vertex_term[vertex_owner < 0]) + np.sum((free * vbar * ale)) + geometric)
        stored = (hamiltonian_f(new) - hamiltonian_f(old)) / dt
        return StepPowers(dt, stored, dissipation, boundary, transport)

    def step(
        self,
        state: FluidState,
        dt: float,
        bc: VelocityBC | None = None,
        u: np.ndarray | None = None,
        moved: SimplicialComplex | None = None,
    ) -> FluidState:
        """Advance by dt; see `advance` for the power split."""
        if dt == 0.0:
            return state
        return self.advance(state, dt, bc, moved, u)[0]


def step_fluid(
    state: FluidState,
    params: FluidParams,
    bc: VelocityBC | None,
    dt: float,
    u: np.ndarray | None = None,
) -> FluidState:
    return FluidSolver(params).step(state, dt, bc, u)


def project_state(state: FluidState, params: FluidParams, dt: float = 1.0) -> FluidState:
    """Make an initial state discretely divergence-free."""
    full = complete_bc(state.complex, state.bc)
    v, _ = pressure_project(state.v, full, dt, params.rho)
    return replace(state, v=v, p=zero_form(state.complex, 0), bc=full)
