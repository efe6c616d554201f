import numpy as np
import pytest

from coupling.reconstruction import body_transformer, reconstruct
from forms.cochain import Form
from forms.operators import hodge_star
from forms.tensor import covector_from_cell_tensor, partial_trace
from orchestrator.checks import transformer_power
from ports.junction import (
    Junction,
    JunctionKind,
    StaleModulationError,
    junction_residual,
    transformer_apply,
)
from ports.port import PairingKind, PortError, PowerPort, pair_power
from rigidbody.se3 import INERTIAL, Pose, Twist, Wrench, exp_so3


def test_finite_port_power():
    w = Wrench(np.arange(6.0))
    t = Twist(np.ones(6))
    assert pair_power(PowerPort("body", w, t, PairingKind.FINITE_DUAL)) == 15.0
    assert pair_power(PowerPort("body", w, t, "finite-dual", sign=-1)) == -15.0


def test_finite_port_frame_mismatch():
    port = PowerPort("body", Wrench(np.ones(6)), Twist(np.ones(6), INERTIAL), PairingKind.FINITE_DUAL)
    with pytest.raises(PortError):
        pair_power(port)


def test_constraint_port_carries_no_power():
    assert pair_power(PowerPort("lambda", np.ones(3), None, PairingKind.FINITE_DUAL)) == 0.0


def test_bad_sign():
    with pytest.raises(PortError):
        PowerPort("x", 1.0, 1.0, PairingKind.FINITE_DUAL, sign=2)


def test_domain_port_pairs_primal_with_dual(rng, square):
    v = Form(1, rng.normal(size=square.n_cells(1)), square)
    port = PowerPort("kinetic", hodge_star(v), v, PairingKind.DOMAIN_WEDGE)
    expected = float(np.sum(v.values ** 2 * square.dual_measures[1] / square.primal_measures[1]))
    assert pair_power(port) == pytest.approx(expected, rel=1e-12)


def test_one_junction_balances(rng):
    f = rng.normal(size=4)
    e1, e2 = rng.normal(size=4), rng.normal(size=4)
    ports = [
        PowerPort("a", e1, f, PairingKind.FINITE_DUAL),
        PowerPort("b", e2, f.copy(), PairingKind.FINITE_DUAL),
        PowerPort("c", -(e1 + e2), f.copy(), PairingKind.FINITE_DUAL),
    ]
    flow, effort = junction_residual(Junction(JunctionKind.ONE, ports))
    assert flow == 0.0
    assert effort <= 1e-15
    assert abs(sum(pair_power(p) for p in ports)) <= 1e-14


def test_zero_junction_balances(rng):
    e = rng.normal(size=3)
    f1 = rng.normal(size=3)
    ports = [
        PowerPort("a", e, f1, PairingKind.FINITE_DUAL),
        PowerPort("b", e.copy(), -f1, PairingKind.FINITE_DUAL),
    ]
    assert junction_residual(Junction(JunctionKind.ZERO, ports)) == (0.0, 0.0)


def test_unpopulated_and_mismatched_ports():
    with pytest.raises(PortError):
        junction_residual(Junction(JunctionKind.ONE, [PowerPort("a", None, np.ones(2), PairingKind.FINITE_DUAL)]))
    ports = [
        PowerPort("a", np.ones(2), np.ones(2), PairingKind.FINITE_DUAL),
        PowerPort("b", np.ones(3), np.ones(3), PairingKind.FINITE_DUAL),
    ]
    with pytest.raises(PortError):
        junction_residual(Junction(JunctionKind.ONE, ports))
    with pytest.raises(PortError):
        Junction(JunctionKind.TRANSFORMER, ports)


def test_body_transformer_junction(rng, ring):
    h = Pose(exp_so3([0.0, 0.0, 0.3]), [0.1, -0.2, 0.0])
    tr = body_transformer(h, ring, "body", 0.5)
    twist = Twist(rng.normal(size=6))
    gamma = transformer_apply(tr, twist, 0.5)
    alpha = partial_trace(covector_from_cell_tensor(rng.normal(size=(ring.n_cells(2), 2, 2)), ring), "body")
    wrench = tr.dual(alpha)
    ports = [
        PowerPort("body", wrench, twist, PairingKind.FINITE_DUAL),
        PowerPort("wall", alpha, gamma, PairingKind.BOUNDARY_DOT),
    ]
    flow, effort = junction_residual(Junction(JunctionKind.TRANSFORMER, ports, tr))
    assert flow == 0.0 and effort == 0.0
    assert pair_power(ports[0]) == pytest.approx(pair_power(ports[1]), rel=1e-12, abs=1e-12)


def test_stale_modulation_is_refused(ring):
    tr = body_transformer(Pose(), ring, "body", 0.0)
    with pytest.raises(StaleModulationError):
        transformer_apply(tr, Twist(np.zeros(6)), 0.01)


def test_transformer_preserves_power(rng, ring):
    assert transformer_power(rng, ring, "body", trials=10) <= 1e-12


def test_wall_velocity_of_a_spinning_body(ring):
    gamma = reconstruct(Twist(np.array([0, 0, 1.0, 0, 0, 0]), INERTIAL), ring, "body")
    q = ring.vertices[ring.component("body").vertices]
    assert np.max(np.abs(gamma.values - np.stack([-q[:, 1], q[:, 0]], axis=1))) <= 1e-15
