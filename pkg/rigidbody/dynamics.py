"""Port-Hamiltonian rigid body on SE(3) with an RK4 / exponential-map stepper."""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Tuple

import numpy as np
from loguru import logger

from rigidbody.se3 import (
    BODY,
    Pose,
    Twist,
    Wrench,
    exp_so3,
    hat,
    orthogonality_error,
    power,
    reproject,
    require_frame,
    vee_antisym,
)

# ω_x, ω_y, v_z are frozen for bodies moving in the xy-plane
PLANAR_MASK = np.array([0.0, 0.0, 1.0, 1.0, 1.0, 0.0])


class NonFiniteStateError(RuntimeError):
    pass


def inertia_matrix(mass: float, rotational: np.ndarray) -> np.ndarray:
    """Body-frame generalized inertia [[J, 0], [0, m I]]."""
    out = np.zeros((6, 6))
    out[:3, :3] = np.asarray(rotational, dtype=float)
    out[3:, 3:] = float(mass) * np.eye(3)
    return out


def disk_inertia(mass: float, radius: float) -> np.ndarray:
    """Uniform disk in the xy-plane, thickness ignored."""
    j = 0.25 * mass * radius ** 2
    return inertia_matrix(mass, np.diag([j, j, 2.0 * j]))


@dataclass(frozen=True)
class RigidBodyState:
    pose: Pose
    p: np.ndarray
    inertia: np.ndarray
    mass: float
    gravity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    planar: bool = False

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(6)
        inertia = np.array(self.inertia, dtype=float)
        if inertia.shape != (6, 6) or not np.allclose(inertia, inertia.T, rtol=0.0, atol=1e-12 * np.abs(inertia).max()):
            raise ValueError("inertia must be a symmetric 6x6 matrix")
        try:
            np.linalg.cholesky(inertia)
        except np.linalg.LinAlgError:
            raise ValueError("inertia must be positive definite") from None
        if self.mass < 0.0:
            raise ValueError(f"mass must be >= 0, got {self.mass}")
        if self.planar:
            p = p * PLANAR_MASK
        if not np.all(np.isfinite(p)):
            raise NonFiniteStateError("momentum is not finite")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "gravity", np.array(self.gravity, dtype=float).reshape(3))

    def twist(self) -> Twist:
        """T^b = 𝓘⁻¹p."""
        return Twist(np.linalg.solve(self.inertia, self.p), BODY)


def jmatrix(p: np.ndarray) -> np.ndarray:
    out = np.zeros((6, 6))
    out[:3, :3] = hat(p[:3])
    out[:3, 3:] = hat(p[3:])
    out[3:, :3] = hat(p[3:])
    return out


def hamiltonian_b(state: RigidBodyState) -> float:
    t = state.twist().vector
    return float(0.5 * state.p @ t + state.mass * state.gravity @ state.pose.xi)


def casimirs(state: RigidBodyState) -> Tuple[float, float]:
    """Lie-Poisson invariants |p_v|² and p_ω·p_v of the free body."""
    pw, pv = state.p[:3], state.p[3:]
    return float(pv @ pv), float(pw @ pv)


def chi(h: Pose, t: Twist) -> Tuple[np.ndarray, np.ndarray]:
    """Body twist to the pose rate (Ṙ, ξ̇) = (R ω̂, R v)."""
    require_frame(t, BODY)
    return h.R @ hat(t.omega), h.R @ t.v


def chi_dual(h: Pose, grad_R: np.ndarray, grad_xi: np.ndarray) -> Wrench:
    """Body wrench with ⟨χ*(Γ)|T⟩ = tr(Γ_Rᵀ Ṙ) + Γ_ξ·ξ̇ for every T."""
    return Wrench(np.concatenate([vee_antisym(h.R.T @ grad_R), h.R.T @ grad_xi]), BODY)


def gravity_wrench(state: RigidBodyState) -> Wrench:
    """-χ*(∂_h H_b) with ∂_h H_b = (0, m g)."""
    grad = chi_dual(state.pose, np.zeros((3, 3)), state.mass * state.gravity)
    return Wrench(-grad.vector, BODY)


def rigid_rhs(state: RigidBodyState, wrench: Wrench) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Ṙ, ξ̇, ṗ) with ṗ = gravity + 𝒥(p)𝓘⁻¹p + W^b."""
    require_frame(wrench, BODY)
    t = state.twist()
    R_dot, xi_dot = chi(state.pose, t)
    p_dot = gravity_wrench(state).vector + jmatrix(state.p) @ t.vector + wrench.vector
    if state.planar:
        p_dot = p_dot * PLANAR_MASK
    return R_dot, xi_dot, p_dot


def power_residual(state: RigidBodyState, wrench: Wrench) -> float:
    """Ḣ_b - ⟨W^b|T^b⟩ with Ḣ_b = ∂_pH·ṗ + ∂_ξH·ξ̇ evaluated along rigid_rhs."""
    t = state.twist()
    _, xi_dot, p_dot = rigid_rhs(state, wrench)
    h_dot = float(t.vector @ p_dot + state.mass * state.gravity @ xi_dot)
    return h_dot - power(wrench, t)


class RigidStepper:
    """Classical RK4 on (ξ, p) with multiplicative rotation stages."""

    def __init__(self):
        self.REPROJECT_TOL = float(os.getenv("PORTFLOW_REPROJECT_TOL", "1e-10"))

    def _rates(self, state: RigidBodyState, R: np.ndarray, xi: np.ndarray, p: np.ndarray, wrench: Wrench):
        stage = replace(state, pose=Pose(R, xi), p=p)
        _, xi_dot, p_dot = rigid_rhs(stage, wrench)
        return stage.twist().omega, xi_dot, p_dot

    def step(self, state: RigidBodyState, wrench: Wrench, dt: float) -> RigidBodyState:
        require_frame(wrench, BODY)
        if dt < 0.0:
            raise ValueError(f"dt must be >= 0, got {dt}")
        if dt == 0.0:
            return state
        R0, xi0, p0 = state.pose.R, state.pose.xi, state.p

        w1, x1, k1 = self._rates(state, R0, xi0, p0, wrench)
        w2, x2, k2 = self._rates(state, R0 @ exp_so3(0.5 * dt * w1), xi0 + 0.5 * dt * x1, p0 + 0.5 * dt * k1, wrench)
        w3, x3, k3 = self._rates(state, R0 @ exp_so3(0.5 * dt * w2), xi0 + 0.5 * dt * x2, p0 + 0.5 * dt * k2, wrench)
        w4, x4, k4 = self._rates(state, R0 @ exp_so3(dt * w3), xi0 + dt * x3, p0 + dt * k3, wrench)

        R = R0 @ exp_so3(dt / 6.0 * (w1 + 2.0 * w2 + 2.0 * w3 + w4))
        xi = xi0 + dt / 6.0 * (x1 + 2.0 * x2 + 2.0 * x3 + x4)
        p = p0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(xi)) and np.all(np.isfinite(p))):
            raise NonFiniteStateError(f"rigid body state became non-finite (dt={dt})")
        drift = orthogonality_error(R)
        if drift > self.REPROJECT_TOL:
            logger.warning(f"Rotation drift {drift:.2e} above {self.REPROJECT_TOL:.0e}, reprojecting")
            R = reproject(R)
        return replace(state, pose=Pose(R, xi), p=p)


def step_rigid(state: RigidBodyState, wrench: Wrench, dt: float) -> RigidBodyState:
    return RigidStepper().step(state, wrench, dt)
