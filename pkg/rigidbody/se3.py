"""SE(3) poses, twists and wrenches in matrix form."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import polar
from scipy.spatial.transform import Rotation

POSE_TOL = 1e-10
BODY = "body"
INERTIAL = "inertial"
FRAMES = (BODY, INERTIAL)


class PoseError(ValueError):
    pass


class FrameMismatchError(ValueError):
    pass


def hat(w: np.ndarray) -> np.ndarray:
    """Skew matrix with hat(w) @ x == cross(w, x)."""
    w = np.asarray(w, dtype=float)
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def vee(m: np.ndarray) -> np.ndarray:
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def vee_antisym(m: np.ndarray) -> np.ndarray:
    """Dual of the pairing tr(Mᵀ hat(w)): returns c with c·w = tr(Mᵀ hat(w))."""
    return np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


def exp_so3(w: np.ndarray) -> np.ndarray:
    """Rodrigues exponential of hat(w)."""
    return Rotation.from_rotvec(np.asarray(w, dtype=float)).as_matrix()


def orthogonality_error(R: np.ndarray) -> float:
    return float(np.max(np.abs(R.T @ R - np.eye(3))))


def reproject(R: np.ndarray) -> np.ndarray:
    """Nearest rotation (polar factor)."""
    u, _ = polar(R)
    return u


@dataclass(frozen=True)
class Pose:
    """h = (R, ξ) acting on points as q -> R q + ξ."""
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    xi: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        xi = np.array(self.xi, dtype=float).reshape(3)
        if R.shape != (3, 3):
            raise PoseError(f"rotation must be 3x3, got {R.shape}")
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(xi))):
            raise PoseError("pose has non-finite entries")
        drift = orthogonality_error(R)
        if drift > POSE_TOL or np.linalg.det(R) <= 0.0:
            raise PoseError(f"not a rotation: |RᵀR - I| = {drift:.3e}, det = {np.linalg.det(R):.3e}")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "xi", xi)

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    def act(self, q: np.ndarray) -> np.ndarray:
        """Map points (m, 3) from the reference configuration."""
        return np.asarray(q, dtype=float) @ self.R.T + self.xi

    def homogeneous(self) -> np.ndarray:
        out = np.eye(4)
        out[:3, :3] = self.R
        out[:3, 3] = self.xi
        return out


def compose(h1: Pose, h2: Pose) -> Pose:
    return Pose(h1.R @ h2.R, h1.xi + h1.R @ h2.xi)


def inverse(h: Pose) -> Pose:
    return Pose(h.R.T, -h.R.T @ h.xi)


def adjoint(h: Pose) -> np.ndarray:
    """Ad_h = [[R, 0], [ξ̂R, R]] acting on twists (ω, v)."""
    out = np.zeros((6, 6))
    out[:3, :3] = h.R
    out[3:, 3:] = h.R
    out[3:, :3] = hat(h.xi) @ h.R
    return out


@dataclass(frozen=True)
class Twist:
    """(ω, v) in rad/s and m/s, tagged with its frame."""
    vector: np.ndarray
    frame: str = BODY

    def __post_init__(self):
        _check_six(self, "twist")

    @property
    def omega(self) -> np.ndarray:
        return self.vector[:3]

    @property
    def v(self) -> np.ndarray:
        return self.vector[3:]


@dataclass(frozen=True)
class Wrench:
    """(τ, f) in N·m and N, tagged with its frame."""
    vector: np.ndarray
    frame: str = BODY

    def __post_init__(self):
        _check_six(self, "wrench")

    @property
    def torque(self) -> np.ndarray:
        return self.vector[:3]

    @property
    def force(self) -> np.ndarray:
        return self.vector[3:]

    def __add__(self, other: "Wrench") -> "Wrench":
        require_frame(other, self.frame)
        return Wrench(self.vector + other.vector, self.frame)

    @staticmethod
    def zero(frame: str = BODY) -> "Wrench":
        return Wrench(np.zeros(6), frame)


def _check_six(obj, what: str) -> None:
    vec = np.array(obj.vector, dtype=float).reshape(-1)
    if vec.shape != (6,):
        raise ValueError(f"{what} must have 6 entries, got {vec.shape}")
    if obj.frame not in FRAMES:
        raise FrameMismatchError(f"unknown frame '{obj.frame}' (have {FRAMES})")
    object.__setattr__(obj, "vector", vec)


def require_frame(obj, frame: str) -> None:
    if obj.frame != frame:
        raise FrameMismatchError(f"expected a {frame}-frame {type(obj).__name__.lower()}, got {obj.frame}")


def twist_to_inertial(h: Pose, t: Twist) -> Twist:
    require_frame(t, BODY)
    return Twist(adjoint(h) @ t.vector, INERTIAL)


def wrench_to_body(h: Pose, w: Wrench) -> Wrench:
    """W^b = Ad_hᵀ W^v."""
    require_frame(w, INERTIAL)
    return Wrench(adjoint(h).T @ w.vector, BODY)


def power(w: Wrench, t: Twist) -> float:
    if w.frame != t.frame:
        raise FrameMismatchError(f"cannot pair a {w.frame}-frame wrench with a {t.frame}-frame twist")
    return float(w.vector @ t.vector)
