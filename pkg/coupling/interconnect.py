"""Partitioned fluid-body coupling through the no-slip 1-junction."""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from math import cos, pi, sin
from typing import Tuple

import numpy as np
from loguru import logger
from scipy.optimize import root_scalar
from scipy.spatial import ConvexHull, QhullError

from coupling.reconstruction import body_transformer, lift, reconstruct, wrench_from_traction
from fluid.boundary import boundary_ports, total_stress
from fluid.solver import FluidSolver, StepPowers
from fluid.state import FluidParams, FluidState, VelocityBC
from fluid.stress import shear_stress
from forms.cochain import BoundaryField
from forms.tensor import partial_trace
from mesh.motion import MeshMotion, deform
from ports.junction import Junction, JunctionKind, ModulatedTransformer
from ports.port import PairingKind, PowerPort
from rigidbody.dynamics import RigidBodyState, RigidStepper, hamiltonian_b
from rigidbody.se3 import BODY, Pose, Twist, Wrench, exp_so3, inverse, power, twist_to_inertial, wrench_to_body

MODES = ("coupled", "prescribed")


class SubIterationDivergence(RuntimeError):
    pass


@dataclass(frozen=True)
class Exchange:
    """What crossed the body boundary during the last step."""
    pose: Pose
    twist: Twist
    gamma: BoundaryField
    alpha: BoundaryField
    wrench_v: Wrench
    wrench_b: Wrench
    motion: MeshMotion
    bc: VelocityBC
    transformer: ModulatedTransformer
    powers: StepPowers
    matching: Wrench = field(default_factory=Wrench.zero)
    diverged: bool = False

    def body_supply(self, component: str) -> float:
        """Interval power the body boundary and the mesh transport feed into the fluid."""
        return self.powers.boundary.get(component, 0.0) + self.powers.transport


@dataclass(frozen=True)
class CouplingState:
    """Fluid and body at time t with the pose that placed ∂ℬ_t in the mesh.

    `reference` holds ∂ℬ₀ (body-frame coordinates of the body boundary
    vertices); the mesh vertices on `component` equal pose(reference).
    """
    fluid: FluidState
    body: RigidBodyState
    pose: Pose
    reference: np.ndarray
    component: str
    outer_bc: VelocityBC = field(default_factory=VelocityBC)
    t: float = 0.0
    anchor: Pose | None = None
    exchange: Exchange | None = None

    def __post_init__(self):
        cx = self.fluid.complex
        current = cx.vertices[cx.component(self.component).vertices]
        placed = self.pose.act(self.reference)[:, : cx.dim]
        gap = float(np.max(np.abs(current - placed), initial=0.0))
        if gap > 1e-12 * max(1.0, float(np.max(np.abs(current)))):
            raise ValueError(f"body boundary is {gap:.3e} away from the recorded pose")
        if self.anchor is None:
            object.__setattr__(self, "anchor", self.pose)


def coupling_state(
    fluid: FluidState,
    body: RigidBodyState,
    component: str,
    outer_bc: VelocityBC | None = None,
) -> CouplingState:
    cx = fluid.complex
    points = lift(cx.vertices[cx.component(component).vertices])
    reference = inverse(body.pose).act(points)
    return CouplingState(fluid, body, body.pose, reference, component, outer_bc or VelocityBC(), fluid.t)


def no_slip_apply(bc: VelocityBC, gamma: BoundaryField, motion: MeshMotion) -> Tuple[VelocityBC, MeshMotion]:
    """ptr_b(v) = ptr_b(u) = γ_∂: Dirichlet velocity and mesh-velocity trace."""
    vertices = gamma.comp.vertices
    return bc.with_component(gamma.component, gamma.values), motion.with_trace(vertices, gamma.values)


def effort_constraint(state: FluidState, params: FluidParams, component: str) -> BoundaryField:
    """α_∂ = ptr_b(-⋆p + 𝒯_κ): the surface stress, without the kinetic part."""
    return partial_trace(total_stress(state, params), component)


def no_slip_junction(cs: CouplingState, params: FluidParams) -> Junction:
    """1-junction joining e_∂1, e_∂2 and the body port (α_∂, γ_∂)."""
    ex = cs.exchange
    if ex is None:
        raise ValueError("no exchange recorded yet; step the coupling first")
    fluid_ports = boundary_ports(cs.fluid, params, ex.motion.velocity, cs.component, side="body").ports
    body_port = PowerPort("alpha", ex.alpha, ex.gamma, PairingKind.BOUNDARY_DOT)
    return Junction(JunctionKind.ONE, [fluid_ports["e_d1"], fluid_ports["e_d2"], body_port])


def _body_area(points: np.ndarray) -> float:
    """Area enclosed by the body boundary (convex hull of its vertices)."""
    try:
        return float(ConvexHull(points[:, :2]).volume)
    except QhullError:
        return 0.0


class Coupler:
    """Staggered explicit coupling with optional sub-iterations.

    Each pass predicts the body pose at t+dt, moves the mesh there, steps
    the fluid with the wall velocity φ_t(Ad_h T^b), turns the surface stress
    into W^b = Ad_hᵀ φ*_t(α_∂) and steps the body from its state at t.

    The body wrench then gets a correction s·𝓘T along the driving twist so
    that the body loses exactly the energy the fluid step received through
    ∂ℬ; the correction is kept in `Exchange.matching`. With
    `pressure_load=False` only the viscous traction loads the body and no
    correction is applied.
    """

    def __init__(
        self,
        params: FluidParams,
        subiterations: int = 1,
        mode: str = "coupled",
        amplitude: float = 0.0,
        frequency: float = 0.0,
        pressure_load: bool = True,
    ):
        if mode not in MODES:
            raise ValueError(f"coupling mode must be one of {MODES}, got '{mode}'")
        if subiterations < 1:
            raise ValueError(f"subiterations must be >= 1, got {subiterations}")
        self.params = params
        self.subiterations = subiterations
        self.mode = mode
        self.amplitude = amplitude
        self.frequency = frequency
        self.pressure_load = pressure_load
        self.fluid = FluidSolver(params)
        self.rigid = RigidStepper()
        self.SUBITER_RATIO = float(os.getenv("PORTFLOW_SUBITER_RATIO", "1.0"))
        self.SUBITER_STRICT = os.getenv("PORTFLOW_SUBITER_STRICT", "0") == "1"
        self.MATCH_MAXITER = int(os.getenv("PORTFLOW_MATCH_MAXITER", "50"))
        self._warned = False

    def prescribed(self, anchor: Pose, t: float) -> Tuple[Pose, Twist]:
        """Pose anchor + A sin(2πft) e_x and its body twist."""
        w = 2.0 * pi * self.frequency
        offset = np.array([self.amplitude * sin(w * t), 0.0, 0.0])
        rate = np.array([self.amplitude * w * cos(w * t), 0.0, 0.0])
        pose = Pose(anchor.R, anchor.xi + offset)
        return pose, Twist(np.concatenate([np.zeros(3), anchor.R.T @ rate]), BODY)

    def _predict(self, body: RigidBodyState, twist: Twist, dt: float) -> Pose:
        R, xi = body.pose.R, body.pose.xi
        return Pose(R @ exp_so3(dt * twist.omega), xi + dt * (R @ twist.v))

    def _added_mass_advisory(self, cs: CouplingState) -> None:
        if self._warned or self.mode != "coupled":
            return
        area = _body_area(cs.reference)
        if area <= 0.0:
            return
        ratio = self.params.rho * area / max(cs.body.mass, 1e-300)
        if ratio > self.SUBITER_RATIO and self.subiterations == 1:
            logger.warning(
                f"Fluid/body density ratio {ratio:.2f} above {self.SUBITER_RATIO}; "
                f"explicit coupling may be unstable, consider sub-iterations"
            )
        self._warned = True

    def _exchange(self, cs: CouplingState, pose: Pose, twist: Twist, dt: float) -> Tuple[FluidState, Exchange]:
        cx = cs.fluid.complex
        comp = cx.component(cs.component)
        target = pose.act(cs.reference)[:, : cx.dim]
        walls = [tag for tag in cx.components if tag != cs.component]
        moved, motion = deform(cx, {cs.component: target - cx.vertices[comp.vertices]}, dt, cs.t + dt, fixed=walls)
        gamma = reconstruct(twist_to_inertial(pose, twist), moved, cs.component)
        bc, motion = no_slip_apply(cs.outer_bc, gamma, motion)

        fluid, powers = self.fluid.advance(cs.fluid, dt, bc, moved=moved, u=motion.velocity)
        if self.pressure_load:
            alpha = effort_constraint(fluid, self.params, cs.component)
        else:
            alpha = partial_trace(shear_stress(fluid, self.params), cs.component)
        w_v = wrench_from_traction(alpha)
        w_b = wrench_to_body(pose, w_v)
        transformer = body_transformer(pose, moved, cs.component, cs.t + dt)
        return fluid, Exchange(pose, twist, gamma, alpha, w_v, w_b, motion, fluid.bc, transformer, powers)

    def _match(self, body0: RigidBodyState, ex: Exchange, component: str, dt: float) -> Tuple[RigidBodyState, Exchange]:
        """Step the body and correct its wrench along 𝓘T so that ΔH_b = -(fluid supply)·dt."""
        body = self.rigid.step(body0, ex.wrench_b, dt)
        direction = body0.inertia @ ex.twist.vector
        slope = dt * float(direction @ ex.twist.vector)
        if not self.pressure_load or slope <= 1e-300:
            return body, ex
        h0 = hamiltonian_b(body0)
        target = -ex.body_supply(component) * dt

        def gap(s: float) -> float:
            trial = self.rigid.step(body0, Wrench(ex.wrench_b.vector + s * direction, BODY), dt)
            return hamiltonian_b(trial) - h0 - target

        g0 = gap(0.0)
        if g0 == 0.0:
            return body, ex
        sol = root_scalar(
            gap, method="secant", x0=0.0, x1=-g0 / slope, xtol=1e-15, rtol=1e-13, maxiter=self.MATCH_MAXITER
        )
        if not sol.converged:
            logger.warning(f"Energy matching did not converge at t={ex.motion.t:.4f}: {sol.flag}")
        matching = Wrench(sol.root * direction, BODY)
        body = self.rigid.step(body0, ex.wrench_b + matching, dt)
        logger.debug(f"Energy matching at t={ex.motion.t:.4f}: s={sol.root:.3e} after {sol.iterations} iterations")
        return body, replace(ex, matching=matching)

    def step(self, cs: CouplingState, dt: float) -> CouplingState:
        if dt < 0.0:
            raise ValueError(f"dt must be >= 0, got {dt}")
        if dt == 0.0:
            return cs
        self._added_mass_advisory(cs)
        body0 = cs.body
        t_new = cs.t + dt

        if self.mode == "prescribed":
            pose, twist = self.prescribed(cs.anchor, t_new)
            _, twist_mid = self.prescribed(cs.anchor, cs.t + 0.5 * dt)
            fluid, ex = self._exchange(cs, pose, twist_mid, dt)
            body = replace(body0, pose=pose, p=body0.inertia @ twist.vector)
            logger.debug(f"Prescribed body at t={t_new:.4f}: wrench {np.round(ex.wrench_b.vector, 6)}")
            return CouplingState(fluid, body, pose, cs.reference, cs.component, cs.outer_bc, t_new, cs.anchor, ex)

        twist0 = body0.twist()
        twist = twist0
        last_change = None
        diverged = False
        for k in range(self.subiterations):
            pose = self._predict(body0, twist, dt)
            fluid, ex = self._exchange(cs, pose, twist, dt)
            body, ex = self._match(body0, ex, cs.component, dt)
            mid = Twist(0.5 * (twist0.vector + body.twist().vector), BODY)
            change = float(np.linalg.norm(mid.vector - twist.vector))
            floor = 1e-14 * max(1.0, float(np.linalg.norm(mid.vector)))
            if last_change is not None and change > max(last_change, floor):
                message = f"sub-iteration {k} at t={t_new:.4f}: twist update grew from {last_change:.3e} to {change:.3e}"
                if self.SUBITER_STRICT:
                    raise SubIterationDivergence(message)
                logger.warning(message)
                diverged = True
            last_change = change
            twist = mid
        ex = replace(ex, diverged=diverged)
        logger.debug(f"Coupled step t={t_new:.4f}: xi={np.round(body.pose.xi, 6)}")
        return CouplingState(fluid, body, pose, cs.reference, cs.component, cs.outer_bc, t_new, cs.anchor, ex)


def interval_wrench_power(before: RigidBodyState, after: RigidBodyState, wrench: Wrench) -> float:
    """⟨W^b | 𝓘⁻¹(p⁰ + p¹)/2⟩ over one step."""
    mean = np.linalg.solve(after.inertia, 0.5 * (before.p + after.p))
    return power(wrench, Twist(mean, BODY))


def fsi_step(cs: CouplingState, dt: float, coupler: Coupler) -> CouplingState:
    return coupler.step(cs, dt)
