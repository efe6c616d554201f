import numpy as np
import pytest

from orchestrator.checks import rigid_power_identity
from rigidbody.dynamics import (
    NonFiniteStateError,
    RigidBodyState,
    RigidStepper,
    casimirs,
    chi,
    chi_dual,
    disk_inertia,
    hamiltonian_b,
    inertia_matrix,
    jmatrix,
    power_residual,
)
from rigidbody.se3 import (
    INERTIAL,
    FrameMismatchError,
    Pose,
    PoseError,
    Twist,
    Wrench,
    adjoint,
    compose,
    exp_so3,
    hat,
    inverse,
    orthogonality_error,
    power,
    twist_to_inertial,
    wrench_to_body,
)


def random_pose(rng):
    return Pose(exp_so3(rng.normal(size=3)), rng.normal(size=3))


def test_hat_is_the_cross_product(rng):
    w, x = rng.normal(size=3), rng.normal(size=3)
    assert np.allclose(hat(w) @ x, np.cross(w, x), rtol=0, atol=1e-14)


def test_exp_is_a_rotation(rng):
    R = exp_so3(rng.normal(size=3) * 3.0)
    assert orthogonality_error(R) <= 1e-14
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-14)


def test_adjoint_is_a_homomorphism(rng):
    h1, h2 = random_pose(rng), random_pose(rng)
    assert np.allclose(adjoint(compose(h1, h2)), adjoint(h1) @ adjoint(h2), rtol=0, atol=1e-12)
    assert np.allclose(adjoint(inverse(h1)) @ adjoint(h1), np.eye(6), rtol=0, atol=1e-12)


def test_pose_rejects_non_rotations():
    with pytest.raises(PoseError):
        Pose(np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(PoseError):
        Pose(np.eye(3) * 1.001)


def test_power_is_frame_invariant(rng):
    h = random_pose(rng)
    t_b = Twist(rng.normal(size=6))
    w_v = Wrench(rng.normal(size=6), INERTIAL)
    assert power(wrench_to_body(h, w_v), t_b) == pytest.approx(power(w_v, twist_to_inertial(h, t_b)), rel=1e-12)
    with pytest.raises(FrameMismatchError):
        power(w_v, t_b)


def test_state_validation():
    inertia = inertia_matrix(1.0, np.eye(3))
    with pytest.raises(NonFiniteStateError):
        RigidBodyState(Pose(), [np.nan, 0, 0, 0, 0, 0], inertia, 1.0)
    with pytest.raises(ValueError):
        RigidBodyState(Pose(), np.zeros(6), -inertia, 1.0)


def test_planar_body_keeps_planar_momentum():
    body = RigidBodyState(Pose(), np.ones(6), disk_inertia(1.0, 0.5), 1.0, planar=True)
    assert list(body.p) == [0.0, 0.0, 1.0, 1.0, 1.0, 0.0]


def test_power_identity(rng):
    assert rigid_power_identity(rng, trials=20) <= 1e-10


def test_power_residual_with_gravity():
    body = RigidBodyState(Pose(), [0, 0, 0, 1.0, 2.0, 0], inertia_matrix(2.0, np.eye(3)), 2.0, [0, 9.81, 0])
    assert abs(power_residual(body, Wrench(np.array([0, 0, 0.3, 1.0, -1.0, 0])))) <= 1e-12


def test_free_body_conserves_energy_and_casimirs(rng):
    body = RigidBodyState(Pose(), rng.normal(size=6), inertia_matrix(1.0, np.diag([1.0, 2.0, 3.0])), 1.0)
    stepper = RigidStepper()
    h0, c0 = hamiltonian_b(body), np.array(casimirs(body))
    state = body
    for _ in range(2000):
        state = stepper.step(state, Wrench.zero(), 1e-3)
    assert abs(hamiltonian_b(state) - h0) / h0 <= 1e-8
    scale = np.array([c0[0], max(abs(c0[1]), np.linalg.norm(body.p[:3]) * np.linalg.norm(body.p[3:]))])
    assert np.max(np.abs(np.array(casimirs(state)) - c0) / scale) <= 1e-8
    assert orthogonality_error(state.pose.R) <= 1e-10


def test_free_fall_is_exact():
    g = np.array([0.0, 9.81, 0.0])
    body = RigidBodyState(Pose(), [0, 0, 0, 0.5, 0, 0], disk_inertia(1.0, 0.5), 1.0, g, planar=True)
    stepper = RigidStepper()
    state = body
    for _ in range(100):
        state = stepper.step(state, Wrench.zero(), 1e-2)
    t = 1.0
    expected = np.array([0.5 * t, 0.0, 0.0]) - 0.5 * g * t ** 2
    assert np.max(np.abs(state.pose.xi - expected)) <= 1e-10


def test_step_arguments():
    body = RigidBodyState(Pose(), np.ones(6), inertia_matrix(1.0, np.eye(3)), 1.0)
    stepper = RigidStepper()
    assert stepper.step(body, Wrench.zero(), 0.0) is body
    with pytest.raises(ValueError):
        stepper.step(body, Wrench.zero(), -1.0)
    with pytest.raises(FrameMismatchError):
        stepper.step(body, Wrench.zero(INERTIAL), 0.1)


def test_chi_dual_pairs_with_the_pose_rate(rng):
    h = random_pose(rng)
    grad_R, grad_xi = rng.normal(size=(3, 3)), rng.normal(size=3)
    t = Twist(rng.normal(size=6))
    R_dot, xi_dot = chi(h, t)
    expected = np.trace(grad_R.T @ R_dot) + grad_xi @ xi_dot
    assert power(chi_dual(h, grad_R, grad_xi), t) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_structure_matrix_is_skew(rng):
    p, t = rng.normal(size=6), rng.normal(size=6)
    J = jmatrix(p)
    assert np.array_equal(J, -J.T)
    assert abs(t @ J @ t) <= 1e-14


def test_inertial_wrench_steps_like_its_body_form(rng):
    h = Pose(exp_so3([0.0, 0.0, 0.4]), [0.3, -0.2, 0.0])
    body = RigidBodyState(h, rng.normal(size=6), disk_inertia(2.0, 0.5), 2.0, planar=True)
    w_b = Wrench(rng.normal(size=6))
    w_v = Wrench(np.linalg.solve(adjoint(h).T, w_b.vector), INERTIAL)
    assert np.allclose(wrench_to_body(h, w_v).vector, w_b.vector, rtol=0.0, atol=1e-12)

    stepper = RigidStepper()
    a = stepper.step(body, wrench_to_body(h, w_v), 0.01)
    b = stepper.step(body, w_b, 0.01)
    assert np.max(np.abs(a.p - b.p)) <= 1e-12
    assert np.max(np.abs(a.pose.xi - b.pose.xi)) <= 1e-12
    assert np.max(np.abs(a.pose.R - b.pose.R)) <= 1e-12
