"""Built-in scenarios. Each one runs from a merged ScenarioConfig and records
its history and tolerance checks; the runner handles outputs and the ledger."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from math import exp
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from audit.reynolds import reynolds_check, translating_snapshots
from coupling.interconnect import (
    Coupler,
    CouplingState,
    coupling_state,
    effort_constraint,
    interval_wrench_power,
    no_slip_junction,
)
from coupling.reconstruction import reconstruct
from fluid.boundary import boundary_power
from fluid.solver import FluidSolver, StepPowers, boundary_flux, complete_bc, divergence, project_state
from fluid.state import FluidParams, FluidState, VelocityBC, hamiltonian_f, initial_state
from fluid.stress import bulk_stress, dissipation_rate
from forms.cochain import Form
from forms.operators import integrate
from forms.tensor import dot_wedge
from mesh.complex import SimplicialComplex
from mesh.io import mesh_from_spec
from orchestrator.checks import Checks, identity_suite, rigid_power_identity
from orchestrator.config import ConfigError, ScenarioConfig, resolve_tags
from ports.junction import junction_residual
from rigidbody.dynamics import (
    RigidBodyState,
    RigidStepper,
    casimirs,
    disk_inertia,
    hamiltonian_b,
    inertia_matrix,
)
from rigidbody.se3 import Pose, Wrench, orthogonality_error, power, twist_to_inertial


@dataclass
class Outcome:
    """What a scenario hands back to the runner."""
    history: pd.DataFrame | None = None
    rigid: Tuple[List[float], List[RigidBodyState]] | None = None
    cochains: Dict[str, Form] = field(default_factory=dict)
    balances: List[str] | None = None
    # ledger balance -> (check name, summary key)
    enforce: Dict[str, Tuple[str, str]] = field(default_factory=dict)


def fluid_params(config: ScenarioConfig) -> FluidParams:
    phys = config.physics
    return FluidParams(
        kappa=float(phys.get("kappa", 0.0)),
        rho=float(phys.get("rho", 1.0)),
        lam=float(phys.get("lambda", 0.0)),
    )


def build_mesh(config: ScenarioConfig) -> SimplicialComplex:
    try:
        complex_ = mesh_from_spec(config.mesh)
    except TypeError as e:
        raise ConfigError("mesh", str(e)) from None
    resolve_tags(config, complex_)
    logger.info(f"Scenario mesh: {complex_.n_cells(0)} vertices, {complex_.n_cells(complex_.dim)} cells")
    return complex_


def build_bc(config: ScenarioConfig, complex_: SimplicialComplex) -> VelocityBC:
    """Lid and inflow entries first, then no-slip on every other outer component,
    so walls win on shared corners. Body components are left to the coupling."""
    speed = float(config.physics.get("lid_speed", 1.0))
    driven: Dict[str, np.ndarray] = {}
    walls: Dict[str, np.ndarray] = {}
    for tag, kind in config.bc.items():
        if kind in ("lid", "inflow"):
            driven[tag] = np.array([speed, 0.0])
    for tag in complex_.components:
        if tag not in driven and config.bc.get(tag) != "body":
            walls[tag] = np.zeros(complex_.dim)
    return VelocityBC({**driven, **walls})


def build_body(config: ScenarioConfig, rng: np.random.Generator, planar: bool) -> RigidBodyState:
    spec = config.body
    mass = float(spec.get("mass", 1.0))
    if "inertia" in spec:
        inertia = inertia_matrix(mass, np.diag(spec["inertia"]))
    elif "radius" in spec:
        inertia = disk_inertia(mass, float(spec["radius"]))
    else:
        inertia = inertia_matrix(mass, np.eye(3))
    p = np.asarray(spec["momentum"], dtype=float) if "momentum" in spec else rng.normal(size=6)
    pose = Pose(np.eye(3), spec.get("xi", [0.0, 0.0, 0.0]))
    return RigidBodyState(pose, p, inertia, mass, spec.get("gravity", [0.0, 0.0, 0.0]), planar)


def fluid_row(state: FluidState, params: FluidParams, u: np.ndarray | None = None, body: str | None = None) -> Dict[str, float]:
    """H_f, instantaneous port powers, stress dissipation and the divergence residual of one state."""
    cx = state.complex
    port_db, port_dv = 0.0, 0.0
    for tag in cx.components:
        if tag == body:
            port_db += boundary_power(state, params, u, tag, "body")
        else:
            port_dv += boundary_power(state, params, u, tag, "fluid")
    full = complete_bc(cx, state.bc)
    div = divergence(state.v, boundary_flux(cx, full))
    return {
        "t": state.t,
        "H_f": hamiltonian_f(state),
        "dissipation_stress": dissipation_rate(state, params),
        "port_dV": port_dv,
        "port_dB": port_db,
        "div_inf": float(np.max(np.abs(div), initial=0.0)),
        "bulk_stress_inf": float(np.max(np.abs(bulk_stress(state, params).array()), initial=0.0)),
    }


STEP_CHANNELS = ("dissipation", "flux_dB", "flux_dV")


def step_channels(powers: StepPowers, body: str | None = None) -> Dict[str, float]:
    """Interval powers of one fluid step; mesh transport goes to the body side when there is one."""
    inner = powers.boundary.get(body, 0.0) if body is not None else 0.0
    outer = float(sum(p for tag, p in powers.boundary.items() if tag != body))
    if body is None:
        outer += powers.transport
    else:
        inner += powers.transport
    return {"dissipation": powers.dissipation, "flux_dB": inner, "flux_dV": outer}


def row_channels(intervals: List[Dict[str, float]], keys=STEP_CHANNELS) -> List[Dict[str, float]]:
    """Per-row channels: row k carries the mean of the steps ending and starting at t_k.

    With a uniform dt the centered difference of the stored energy at t_k
    is the same mean, so the ledger closes as exactly as each step does.
    """
    if not intervals:
        return [{key: 0.0 for key in keys}]
    n = len(intervals)
    rows = []
    for k in range(n + 1):
        adjacent = [intervals[j] for j in (k - 1, k) if 0 <= j < n]
        rows.append({key: float(np.mean([c[key] for c in adjacent])) for key in keys})
    return rows


def with_channels(rows: List[Dict[str, float]], intervals: List[Dict[str, float]], keys=STEP_CHANNELS) -> pd.DataFrame:
    return pd.DataFrame([{**row, **extra} for row, extra in zip(rows, row_channels(intervals, keys))])


def run_fluid(config: ScenarioConfig, state: FluidState, params: FluidParams) -> Tuple[pd.DataFrame, FluidState]:
    solver = FluidSolver(params)
    rows = [fluid_row(state, params)]
    intervals = []
    for k in range(config.steps):
        state, powers = solver.advance(state, config.dt)
        rows.append(fluid_row(state, params))
        intervals.append(step_channels(powers))
        if (k + 1) % 10 == 0:
            logger.info(f"Step {k + 1}/{config.steps}: t={state.t:.3f} H_f={rows[-1]['H_f']:.6e}")
    return with_channels(rows, intervals), state


def record_fluid_checks(history: pd.DataFrame, checks: Checks, tol: float) -> None:
    checks.record("divergence", history["div_inf"].max(), tol)
    checks.record("dissipation_min", history["dissipation"].min())


class Scenario:
    NAME = ""
    DESCRIPTION = ""
    DEFAULTS: Dict[str, Any] = {}

    @property
    def defaults(self) -> Dict[str, Any]:
        return {"scenario": self.NAME, **copy.deepcopy(self.DEFAULTS)}

    def run(self, config: ScenarioConfig, rng: np.random.Generator, checks: Checks) -> Outcome:
        raise NotImplementedError


class Identities(Scenario):
    NAME = "identities"
    DESCRIPTION = "randomized operator identities: pairing, Stokes, d∘d, transformer power, wrench theorem"
    DEFAULTS = {"seed": 42}

    def run(self, config, rng, checks):
        identity_suite(rng, checks)
        return Outcome()


def taylor_green_field(x: np.ndarray) -> np.ndarray:
    return np.stack([np.sin(x[:, 0]) * np.cos(x[:, 1]), -np.cos(x[:, 0]) * np.sin(x[:, 1])], axis=1)


class TaylorGreen(Scenario):
    NAME = "taylor-green"
    DESCRIPTION = "decaying Taylor-Green vortex on the periodic square"
    DEFAULTS = {
        "dt": 0.02,
        "t_end": 1.0,
        "mesh": {"kind": "periodic-square", "res": 64},
        "physics": {"kappa": 0.01, "rho": 1.0},
    }

    def run(self, config, rng, checks):
        cx = build_mesh(config)
        params = fluid_params(config)
        state = project_state(initial_state(cx, params, taylor_green_field), params)
        history, state = run_fluid(config, state, params)

        decay = np.exp(-4.0 * params.nu * history["t"].to_numpy())
        ratio = history["H_f"].to_numpy() / history["H_f"].iloc[0]
        checks.record("energy_decay", np.max(np.abs(ratio - decay) / decay))
        record_fluid_checks(history, checks, FluidSolver(params).DIV_TOL)
        logger.info(f"Energy ratio at t={history['t'].iloc[-1]:.2f}: {ratio[-1]:.5f} (analytic {exp(-4.0 * params.nu * history['t'].iloc[-1]):.5f})")
        return Outcome(
            history,
            cochains={"velocity": state.v, "pressure": state.p},
            balances=["fluid"],
            enforce={"fluid": ("fluid_ledger", "max_relative")},
        )


class LidCavity(Scenario):
    NAME = "lid-cavity"
    DESCRIPTION = "lid-driven cavity on the unit square"
    DEFAULTS = {
        "dt": 0.005,
        "t_end": 0.5,
        "mesh": {"kind": "unit-square", "res": 16},
        "physics": {"kappa": 0.01, "rho": 1.0},
        "bc": {"top": "lid", "bottom": "no-slip", "left": "no-slip", "right": "no-slip"},
    }

    def run(self, config, rng, checks):
        cx = build_mesh(config)
        params = fluid_params(config)
        bc = build_bc(config, cx)
        state = project_state(initial_state(cx, params, None, bc), params)
        history, state = run_fluid(config, state, params)
        record_fluid_checks(history, checks, FluidSolver(params).DIV_TOL)
        return Outcome(history, cochains={"velocity": state.v, "pressure": state.p}, balances=["fluid"])


def run_rigid(config: ScenarioConfig, body: RigidBodyState) -> Tuple[List[float], List[RigidBodyState]]:
    stepper = RigidStepper()
    wrench = Wrench.zero()
    times, states = [0.0], [body]
    t = 0.0
    for _ in range(config.steps):
        body = stepper.step(body, wrench, config.dt)
        t += config.dt
        times.append(t)
        states.append(body)
    return times, states


def rigid_history(times: List[float], states: List[RigidBodyState]) -> pd.DataFrame:
    wrench = Wrench.zero()
    return pd.DataFrame(
        {
            "t": times,
            "H_b": [hamiltonian_b(s) for s in states],
            "P_W": [power(wrench, s.twist()) for s in states],
        }
    )


class FreeBody(Scenario):
    NAME = "free-body"
    DESCRIPTION = "torque-free tumbling rigid body, energy and Casimir drift"
    DEFAULTS = {
        "seed": 7,
        "dt": 1e-3,
        "t_end": 10.0,
        "body": {"mass": 1.0, "inertia": [1.0, 2.0, 3.0]},
    }

    def run(self, config, rng, checks):
        body = build_body(config, rng, planar=False)
        times, states = run_rigid(config, body)

        energy = np.array([hamiltonian_b(s) for s in states])
        c = np.array([casimirs(s) for s in states])
        pw0, pv0 = body.p[:3], body.p[3:]
        scales = np.array([max(c[0, 0], 1e-300), max(abs(c[0, 1]), np.linalg.norm(pw0) * np.linalg.norm(pv0), 1e-300)])
        checks.record("energy_drift", np.max(np.abs(energy - energy[0])) / abs(energy[0]))
        checks.record("casimir_drift", np.max(np.abs(c - c[0]) / scales))
        checks.record("orthogonality", max(orthogonality_error(s.pose.R) for s in states))
        checks.record("rigid_power_identity", rigid_power_identity(rng))
        return Outcome(
            rigid_history(times, states),
            rigid=(times, states),
            balances=["rigid"],
            enforce={"rigid": ("rigid_ledger", "max_residual")},
        )


class FallingBodyVacuum(Scenario):
    NAME = "falling-body-vacuum"
    DESCRIPTION = "planar rigid body falling under gravity without fluid"
    DEFAULTS = {
        "dt": 1e-3,
        "t_end": 1.0,
        "body": {"mass": 1.0, "radius": 0.5, "gravity": [0.0, 9.81, 0.0], "momentum": [0.0] * 6},
    }

    def run(self, config, rng, checks):
        body = build_body(config, rng, planar=True)
        times, states = run_rigid(config, body)
        t = np.array(times)
        v0 = body.twist().v
        # g is the inverse direction of the gravitational acceleration
        exact = body.pose.xi[None, :] + t[:, None] * v0[None, :] - 0.5 * t[:, None] ** 2 * body.gravity[None, :]
        xi = np.array([s.pose.xi for s in states])
        checks.record("free_fall", np.max(np.abs(xi - exact)))
        return Outcome(
            rigid_history(times, states),
            rigid=(times, states),
            balances=["rigid"],
            enforce={"rigid": ("rigid_ledger", "max_residual")},
        )


def coupled_row(cs: CouplingState, params: FluidParams) -> Dict[str, float]:
    ex = cs.exchange
    u = None if ex is None else ex.motion.velocity
    row = fluid_row(cs.fluid, params, u, body=cs.component)
    row["H_b"] = hamiltonian_b(cs.body)
    if ex is None:
        row.update({"P_dB_stress": 0.0, "force_x": 0.0, "force_y": 0.0, "torque_z": 0.0, "subiter_diverged": 0.0})
    else:
        row["P_dB_stress"] = -integrate(dot_wedge(effort_constraint(cs.fluid, params, cs.component), ex.gamma))
        row["force_x"], row["force_y"] = ex.wrench_v.force[:2]
        row["torque_z"] = ex.wrench_v.torque[2]
        row["subiter_diverged"] = float(ex.diverged)
    for i in range(3):
        row[f"xi{i}"] = cs.body.pose.xi[i]
    for i in range(6):
        row[f"p{i}"] = cs.body.p[i]
    return row


COUPLED_CHANNELS = STEP_CHANNELS + ("P_W", "P_match")


def coupled_channels(before: CouplingState, after: CouplingState) -> Dict[str, float]:
    """Fluid step channels plus the wrench power into the body over the step."""
    ex = after.exchange
    channels = step_channels(ex.powers, body=after.component)
    channels["P_W"] = interval_wrench_power(before.body, after.body, ex.wrench_b + ex.matching)
    channels["P_match"] = interval_wrench_power(before.body, after.body, ex.matching)
    return channels


def body_component(config: ScenarioConfig) -> str:
    tags = [tag for tag, kind in config.bc.items() if kind == "body"]
    if len(tags) != 1:
        raise ConfigError("bc", f"coupled scenarios need exactly one 'body' component, got {tags}")
    return tags[0]


def run_coupled(config: ScenarioConfig, rng: np.random.Generator, checks: Checks, mode: str) -> Outcome:
    cx = build_mesh(config)
    tag = body_component(config)
    params = fluid_params(config)
    opts = config.coupling
    coupler = Coupler(
        params,
        subiterations=int(opts.get("subiterations", 1)),
        mode=mode,
        amplitude=float(opts.get("amplitude", 0.0)),
        frequency=float(opts.get("frequency", 0.0)),
        pressure_load=bool(opts.get("pressure_load", True)),
    )
    body = build_body(config, rng, planar=True)
    if mode == "prescribed":
        _, twist0 = coupler.prescribed(body.pose, 0.0)
        body = replace(body, p=body.inertia @ twist0.vector)

    outer = build_bc(config, cx)
    gamma = reconstruct(twist_to_inertial(body.pose, body.twist()), cx, tag)
    fluid = project_state(initial_state(cx, params, None, outer.with_component(tag, gamma.values)), params)
    cs = coupling_state(fluid, body, tag, outer)

    rows = [coupled_row(cs, params)]
    intervals = []
    flow_res, effort_res, advection = 0.0, 0.0, 0.0
    for k in range(config.steps):
        before = cs
        cs = coupler.step(cs, config.dt)
        rows.append(coupled_row(cs, params))
        intervals.append(coupled_channels(before, cs))
        flow, effort = junction_residual(no_slip_junction(cs, params))
        flow_res, effort_res = max(flow_res, flow), max(effort_res, effort)
        advection = max(advection, abs(rows[-1]["port_dB"] - rows[-1]["P_dB_stress"]))
        logger.info(
            f"Step {k + 1}/{config.steps}: t={cs.t:.3f} H_f={rows[-1]['H_f']:.6e} H_b={rows[-1]['H_b']:.6e} "
            f"force=({rows[-1]['force_x']:.4f}, {rows[-1]['force_y']:.4f})"
        )

    history = with_channels(rows, intervals, COUPLED_CHANNELS)
    record_fluid_checks(history, checks, FluidSolver(params).DIV_TOL)
    checks.record("junction_flow", flow_res)
    checks.record("junction_effort", effort_res)
    checks.record("advection_cancellation", advection)
    cochains = {"velocity": cs.fluid.v, "pressure": cs.fluid.p}
    if mode == "coupled":
        checks.record("subiterations", history["subiter_diverged"].sum())
        if not coupler.pressure_load:
            return Outcome(history, cochains=cochains, balances=["fluid", "rigid"])
        return Outcome(
            history,
            cochains=cochains,
            balances=["fluid", "coupled", "rigid"],
            enforce={"coupled": ("coupled_ledger", "max_relative")},
        )
    return Outcome(history, cochains=cochains, balances=["fluid"])


CYLINDER_MESH = {"kind": "annulus", "r_in": 0.5, "r_out": 2.0, "res": 16, "inner_tag": "body", "outer_tag": "outer", "inner_convention": -1}


class PrescribedCylinder(Scenario):
    NAME = "prescribed-cylinder"
    DESCRIPTION = "cylinder oscillating on a prescribed path inside a closed vessel"
    DEFAULTS = {
        "dt": 0.01,
        "t_end": 0.2,
        "mesh": CYLINDER_MESH,
        "physics": {"kappa": 0.01, "rho": 1.0},
        "bc": {"body": "body", "outer": "no-slip"},
        "body": {"mass": 2.0, "radius": 0.5},
        "coupling": {"mode": "prescribed", "amplitude": 0.05, "frequency": 1.0},
    }

    def run(self, config, rng, checks):
        return run_coupled(config, rng, checks, "prescribed")


class FsiCylinder(Scenario):
    NAME = "fsi-cylinder-2d"
    DESCRIPTION = "freely moving cylinder coupled to the fluid through the no-slip junction"
    DEFAULTS = {
        "dt": 0.01,
        "t_end": 0.1,
        "mesh": CYLINDER_MESH,
        "physics": {"kappa": 0.01, "rho": 1.0},
        "bc": {"body": "body", "outer": "no-slip"},
        "body": {"mass": 2.0, "radius": 0.5, "momentum": [0.0, 0.0, 0.0, 0.2, 0.0, 0.0]},
        "coupling": {"mode": "coupled", "subiterations": 3},
    }

    def run(self, config, rng, checks):
        if config.coupling.get("mode", "coupled") != "coupled":
            raise ConfigError("coupling.mode", "fsi-cylinder-2d runs in coupled mode")
        return run_coupled(config, rng, checks, "coupled")


class ReynoldsTranslate(Scenario):
    NAME = "reynolds-translate"
    DESCRIPTION = "Reynolds transport on a uniformly accelerating mesh under dt halving"
    DEFAULTS = {
        "dt": 0.02,
        "t_end": 0.04,
        "mesh": {"kind": "unit-square", "res": 8},
    }
    ACCELERATION = np.array([1.0, 0.5])
    HALVINGS = 3

    @staticmethod
    def density(x: np.ndarray) -> np.ndarray:
        return 1.0 + 2.0 * x[:, 0] + 3.0 * x[:, 1]

    def run(self, config, rng, checks):
        cx = build_mesh(config)
        rows = []
        gap = 0.0
        for k in range(self.HALVINGS + 1):
            dt = config.dt / 2 ** k
            steps = max(1, int(round(config.t_end / dt)))
            result = reynolds_check(translating_snapshots(cx, self.density, self.ACCELERATION, dt, steps), dt)
            gap = max(gap, result.representation_gap)
            rows.append({"dt": dt, "steps": steps, "max_residual": result.max_residual, "gap": result.representation_gap})
        history = pd.DataFrame(rows)
        res = history["max_residual"].to_numpy()
        for k in range(self.HALVINGS):
            checks.band(f"reynolds_order_{k + 1}", res[k] / res[k + 1], 1.8, 2.2)
        checks.record("representation_gap", gap)
        return Outcome(history)


SCENARIOS: Dict[str, Scenario] = {
    cls.NAME: cls()
    for cls in (
        Identities,
        TaylorGreen,
        LidCavity,
        FreeBody,
        FallingBodyVacuum,
        PrescribedCylinder,
        FsiCylinder,
        ReynoldsTranslate,
    )
}
