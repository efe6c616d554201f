from dataclasses import replace
from math import pi

import numpy as np
import pytest

from audit.ledger import power_ledger

from coupling.interconnect import Coupler, coupling_state, no_slip_junction
from coupling.reconstruction import reconstruct, reconstruct_body_frame
from fluid.solver import project_state
from fluid.state import FluidParams, VelocityBC, initial_state
from orchestrator.checks import Checks, reconstruction_duality, wrench_theorem
from orchestrator.config import ConfigError, config_from_dict
from orchestrator.scenarios import CYLINDER_MESH, build_body, run_coupled, run_rigid
from ports.junction import junction_residual
from rigidbody.dynamics import RigidBodyState, disk_inertia
from rigidbody.se3 import Pose, Twist, exp_so3, twist_to_inertial


def cylinder(scenario, **overrides):
    raw = {"scenario": scenario, "t_end": 0.03, "mesh": {**CYLINDER_MESH, "res": 12}}
    raw.update(overrides)
    return config_from_dict(raw)


def passed(checks, name):
    return checks.as_dict()[name]["passed"]


def test_reconstruction_is_dual_to_the_wrench(rng, ring):
    assert reconstruction_duality(rng, ring, "body") <= 1e-12


def test_pressure_wrenches():
    checks = Checks()
    wrench_theorem(checks)
    assert checks.passed, checks.as_dict()


def test_coupler_arguments():
    params = FluidParams(kappa=0.01)
    with pytest.raises(ValueError):
        Coupler(params, mode="loose")
    with pytest.raises(ValueError):
        Coupler(params, subiterations=0)


def test_prescribed_path():
    coupler = Coupler(FluidParams(), mode="prescribed", amplitude=0.05, frequency=1.0)
    pose, twist = coupler.prescribed(Pose(), 0.0)
    assert np.allclose(pose.xi, 0.0)
    assert twist.v[0] == pytest.approx(0.05 * 2 * pi)
    pose, twist = coupler.prescribed(Pose(), 0.25)
    assert pose.xi[0] == pytest.approx(0.05)
    assert abs(twist.v[0]) <= 1e-15


def test_prescribed_run_keeps_the_junction(rng):
    checks = Checks()
    outcome = run_coupled(cylinder("prescribed-cylinder"), rng, checks, "prescribed")
    for name in ("divergence", "junction_flow", "junction_effort", "advection_cancellation"):
        assert passed(checks, name), checks.as_dict()[name]
    assert len(outcome.history) == 4
    assert outcome.balances == ["fluid"]
    assert outcome.history["xi0"].iloc[-1] == pytest.approx(0.05 * np.sin(2 * pi * 0.03), rel=1e-9)


def test_light_fluid_leaves_the_body_free(rng):
    config = cylinder("fsi-cylinder-2d", physics={"kappa": 0.0, "rho": 1e-12}, coupling={"subiterations": 1})
    outcome = run_coupled(config, rng, Checks(), "coupled")
    history = outcome.history
    # momentum 0.2 on mass 2
    assert history["xi0"].iloc[-1] == pytest.approx(0.1 * 0.03, abs=1e-9)
    assert np.max(np.abs(history["xi1"])) <= 1e-9
    assert np.all(np.isfinite(history["P_W"]))
    assert outcome.enforce == {"coupled": ("coupled_ledger", "max_relative")}


def test_body_at_rest_in_fluid_at_rest(ring):
    params = FluidParams(kappa=0.01)
    fluid = project_state(initial_state(ring, params), params)
    body = RigidBodyState(Pose(), np.zeros(6), disk_inertia(1.0, 0.5), 1.0, planar=True)
    cs = coupling_state(fluid, body, "body", VelocityBC({"outer": np.zeros(2)}))
    with pytest.raises(ValueError):
        no_slip_junction(cs, params)
    with pytest.raises(ValueError):
        replace(cs, pose=Pose(np.eye(3), [0.1, 0.0, 0.0]))

    coupler = Coupler(params)
    assert coupler.step(cs, 0.0) is cs
    with pytest.raises(ValueError):
        coupler.step(cs, -0.01)
    stepped = coupler.step(cs, 0.01)
    assert stepped.t == pytest.approx(0.01)
    assert np.all(stepped.body.p == 0.0)
    flow, effort = junction_residual(no_slip_junction(stepped, params))
    assert flow == 0.0
    assert effort <= 1e-12


def test_body_frame_reconstruction_agrees(rng, ring):
    h = Pose(exp_so3([0.0, 0.0, 0.7]), [0.2, -0.1, 0.0])
    twist = Twist(rng.normal(size=6))
    direct = reconstruct(twist_to_inertial(h, twist), ring, "body").values
    assert np.max(np.abs(reconstruct_body_frame(h, twist, ring, "body").values - direct)) <= 1e-12


def test_coupled_ledger_closes(rng):
    checks = Checks()
    outcome = run_coupled(cylinder("fsi-cylinder-2d"), rng, checks, "coupled")
    assert outcome.balances == ["fluid", "coupled", "rigid"]
    _, summary = power_ledger(outcome.history, outcome.balances)
    assert summary["coupled"]["max_relative"] <= 1e-3
    assert summary["fluid"]["max_relative"] <= 1e-6
    for name in ("subiterations", "advection_cancellation", "junction_flow", "divergence"):
        assert passed(checks, name), checks.as_dict()[name]
    assert np.all(np.isfinite(outcome.history["P_match"]))


def test_body_without_pressure_load_follows_rigid_dynamics(rng):
    config = cylinder(
        "fsi-cylinder-2d",
        physics={"kappa": 0.0},
        body={"momentum": [0.0, 0.0, 0.03, 0.2, -0.1, 0.0]},
        coupling={"subiterations": 2, "pressure_load": False},
    )
    outcome = run_coupled(config, rng, Checks(), "coupled")
    assert outcome.enforce == {}
    assert "coupled" not in outcome.balances
    _, states = run_rigid(config, build_body(config, rng, planar=True))
    history = outcome.history
    xi = np.array([s.pose.xi for s in states])
    p = np.array([s.p for s in states])
    assert np.max(np.abs(history[["xi0", "xi1", "xi2"]].to_numpy() - xi)) <= 1e-12
    assert np.max(np.abs(history[[f"p{i}" for i in range(6)]].to_numpy() - p)) <= 1e-12


def test_pressure_load_must_be_a_flag():
    with pytest.raises(ConfigError):
        cylinder("fsi-cylinder-2d", coupling={"pressure_load": "no"})
