"""Tracking-error coordinates and their uncertain/nominal dynamics.

The controller works on the reduced error triple

    e = [e_d, e_z, e_o]

where ``e_d`` is the horizontal distance to the reference point, ``e_z`` the
vertical offset and ``e_o`` the projected orientation error (the cross
product of the unit horizontal error with the heading direction).  The triple
does not determine the underlying planar geometry, so every ``ErrorState``
carries the raw context (e_x, e_y, psi) needed to evaluate the dynamics.

The error dynamics decompose as

    d/dt e = J(e) v + zeta(e, dpd) + xi(e, omega)

with the input Jacobian J, the reference-velocity drift zeta, and the
disturbance channel xi.  ``e_o`` is undefined at e_d = 0; the controller keeps
e_d above a positive floor so the transform never degenerates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .vehicle import BodyVelocity, VehicleState


class SingularTransformError(ValueError):
    """Raised when the orientation error is evaluated at e_d = 0."""


class ErrorConstraintViolation(ValueError):
    """Raised when an error-dynamics term is evaluated below the e_d floor."""


@dataclass(frozen=True)
class ErrorState:
    """Reduced error triple plus the planar context it was computed from."""

    e_d: float
    e_z: float
    e_o: float
    e_x: float
    e_y: float
    psi: float

    def __post_init__(self):
        ed = math.hypot(self.e_x, self.e_y)
        if not math.isclose(ed, self.e_d, rel_tol=1e-6, abs_tol=1e-12):
            raise ValueError(
                f"inconsistent context: hypot(e_x, e_y) = {ed} but e_d = {self.e_d}"
            )
        if abs(self.e_o) > 1.0 + 1e-12:
            raise ValueError(f"|e_o| = {abs(self.e_o)} exceeds 1")

    @classmethod
    def from_components(cls, e_x: float, e_y: float, e_z: float, psi: float) -> "ErrorState":
        e_d = math.hypot(e_x, e_y)
        if e_d == 0.0:
            raise SingularTransformError(
                "orientation error is undefined at e_d = 0"
            )
        e_o = (e_x / e_d) * math.sin(psi) - (e_y / e_d) * math.cos(psi)
        return cls(e_d=e_d, e_z=e_z, e_o=e_o, e_x=e_x, e_y=e_y, psi=psi)

    @property
    def triple(self) -> np.ndarray:
        return np.array([self.e_d, self.e_z, self.e_o])


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Smooth desired position with its analytic time derivative."""

    position: Callable[[float], np.ndarray]
    velocity: Callable[[float], np.ndarray]

    def check_derivative(self, times: np.ndarray, tol_scale: float = 1e-6) -> None:
        """Verify that ``velocity`` matches a central difference of ``position``."""
        h = 1e-6
        for t in np.asarray(times, dtype=float):
            fd = (self.position(t + h) - self.position(t - h)) / (2.0 * h)
            v = self.velocity(t)
            tol = tol_scale * (1.0 + float(np.linalg.norm(v)))
            err = float(np.linalg.norm(fd - v))
            if err > max(tol, 1e-4 * h):
                raise ValueError(
                    f"reference velocity mismatches position derivative at t={t}: "
                    f"|fd - v| = {err:.3g}"
                )


def circle_reference(
    radius: float = 3.0,
    period: float = 50.0,
    center: np.ndarray | None = None,
    depth_amplitude: float = 0.0,
) -> ReferenceTrajectory:
    """Horizontal circle traced clockwise from the top of the circle.

    position(t) = center + [R sin(a t), R cos(a t), A sin(a t)] with
    a = 2 pi / period.
    """
    c = np.zeros(3) if center is None else np.asarray(center, dtype=float)
    a = 2.0 * math.pi / period

    def position(t: float) -> np.ndarray:
        return c + np.array(
            [radius * math.sin(a * t), radius * math.cos(a * t), depth_amplitude * math.sin(a * t)]
        )

    def velocity(t: float) -> np.ndarray:
        return np.array(
            [radius * a * math.cos(a * t), -radius * a * math.sin(a * t), depth_amplitude * a * math.cos(a * t)]
        )

    return ReferenceTrajectory(position=position, velocity=velocity)


def stationary_reference(point: np.ndarray) -> ReferenceTrajectory:
    p = np.asarray(point, dtype=float).copy()
    return ReferenceTrajectory(
        position=lambda t: p.copy(), velocity=lambda t: np.zeros(3)
    )


def line_reference(start: np.ndarray, velocity: np.ndarray) -> ReferenceTrajectory:
    p0 = np.asarray(start, dtype=float).copy()
    v0 = np.asarray(velocity, dtype=float).copy()
    return ReferenceTrajectory(
        position=lambda t: p0 + v0 * t, velocity=lambda t: v0.copy()
    )


@dataclass
class ErrorConstraintSet:
    """Feasible error set: admissible positions with e_d bounded away from zero."""

    epsilon: float
    world: "object" = None  # KnownWorld; kept loose to avoid an import cycle

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")


def to_error_coords(state: VehicleState, t: float, ref: ReferenceTrajectory) -> ErrorState:
    """Transform an inertial pose into error coordinates at time ``t``."""
    pd = ref.position(t)
    return ErrorState.from_components(
        e_x=state.x - float(pd[0]),
        e_y=state.y - float(pd[1]),
        e_z=state.z - float(pd[2]),
        psi=state.psi,
    )


def _check_floor(e: ErrorState, epsilon: float) -> None:
    if e.e_d < epsilon:
        raise ErrorConstraintViolation(
            f"e_d = {e.e_d} below the floor epsilon = {epsilon}"
        )


def error_jacobian(e: ErrorState, epsilon: float = 0.0) -> np.ndarray:
    """Input Jacobian of the error dynamics, a 3x3 matrix.

    Row 1 couples surge to the distance error, row 2 heave to the vertical
    error, row 3 surge and yaw rate to the orientation error.
    """
    _check_floor(e, epsilon)
    s, c = math.sin(e.psi), math.cos(e.psi)
    ed2 = e.e_d**2
    a = (e.e_x * c + e.e_y * s) / e.e_d
    b = (e.e_y * s * c**2 - e.e_x * s**2 * c) / ed2
    g = e.e_x * e.e_y / ed2
    return np.array([[a, 0.0, 0.0], [0.0, 1.0, 0.0], [b, 0.0, g]])


def drift_term(e: ErrorState, ref_vel: np.ndarray, epsilon: float = 0.0) -> np.ndarray:
    """Reference-velocity drift of the error dynamics (linear in ref_vel)."""
    _check_floor(e, epsilon)
    ref_vel = np.asarray(ref_vel, dtype=float)
    s, c = math.sin(e.psi), math.cos(e.psi)
    return np.array(
        [
            -(e.e_x * ref_vel[0] + e.e_y * ref_vel[1]) / e.e_d,
            -ref_vel[2],
            (e.e_x * ref_vel[1] - e.e_y * ref_vel[0]) * s * c / e.e_d**2,
        ]
    )


def disturbance_term(e: ErrorState, omega: np.ndarray, epsilon: float = 0.0) -> np.ndarray:
    """Disturbance channel of the error dynamics (linear in omega)."""
    _check_floor(e, epsilon)
    omega = np.asarray(omega, dtype=float)
    s, c = math.sin(e.psi), math.cos(e.psi)
    return np.array(
        [
            (e.e_x * omega[0] + e.e_y * omega[1]) / e.e_d,
            omega[2],
            (e.e_y * omega[0] - e.e_x * omega[1]) * s * c / e.e_d**2,
        ]
    )


def nominal_error_dynamics(
    e_hat: ErrorState, v_hat: BodyVelocity, ref_vel: np.ndarray, epsilon: float = 0.0
) -> np.ndarray:
    """Disturbance-free error derivative J(e) v + zeta(e, ref_vel)."""
    return error_jacobian(e_hat, epsilon) @ v_hat.array + drift_term(e_hat, ref_vel, epsilon)


def xi_bound(epsilon: float, omega_bar: float) -> float:
    """Certified bound on the norm of the disturbance channel over e_d >= epsilon.

    Componentwise: the first two entries are each bounded by the disturbance
    norm, the third by omega_bar / (2 epsilon) because |sin cos| <= 1/2 and
    the numerator is at most e_d * omega_bar.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if omega_bar < 0.0:
        raise ValueError("omega_bar must be nonnegative")
    return math.sqrt(2.0 * omega_bar**2 + (omega_bar / (2.0 * epsilon)) ** 2)


# ---------------------------------------------------------------------------
# Vectorized kernels.  Same formulas as the scalar operations above, written
# for arrays of configurations; used by constant certification and the
# sampling-based test suites.  A dedicated test pins them to the scalar ops.
# ---------------------------------------------------------------------------


def batch_triple(ex, ey, ez, psi):
    """Error triples for arrays of planar contexts; shape (..., 3)."""
    ed = np.hypot(ex, ey)
    eo = (ex * np.sin(psi) - ey * np.cos(psi)) / ed
    return np.stack([ed, ez, eo], axis=-1)


def batch_jacobian(ex, ey, psi):
    """Input Jacobians for arrays of planar contexts; shape (..., 3, 3)."""
    ex = np.asarray(ex, dtype=float)
    s, c = np.sin(psi), np.cos(psi)
    ed2 = ex**2 + ey**2
    ed = np.sqrt(ed2)
    a = (ex * c + ey * s) / ed
    b = (ey * s * c**2 - ex * s**2 * c) / ed2
    g = ex * ey / ed2
    out = np.zeros(ex.shape + (3, 3))
    out[..., 0, 0] = a
    out[..., 1, 1] = 1.0
    out[..., 2, 0] = b
    out[..., 2, 2] = g
    return out


def batch_drift(ex, ey, psi, ref_vel):
    """Drift terms for arrays of planar contexts; ref_vel broadcasts to (..., 3)."""
    ref_vel = np.asarray(ref_vel, dtype=float)
    s, c = np.sin(psi), np.cos(psi)
    ed2 = ex**2 + ey**2
    ed = np.sqrt(ed2)
    vx, vy, vz = ref_vel[..., 0], ref_vel[..., 1], ref_vel[..., 2]
    return np.stack(
        [
            -(ex * vx + ey * vy) / ed,
            -vz * np.ones_like(ed),
            (ex * vy - ey * vx) * s * c / ed2,
        ],
        axis=-1,
    )


def batch_disturbance(ex, ey, psi, omega):
    """Disturbance terms for arrays of planar contexts; omega (..., >=3)."""
    omega = np.asarray(omega, dtype=float)
    s, c = np.sin(psi), np.cos(psi)
    ed2 = ex**2 + ey**2
    ed = np.sqrt(ed2)
    w1, w2, w3 = omega[..., 0], omega[..., 1], omega[..., 2]
    return np.stack(
        [
            (ex * w1 + ey * w2) / ed,
            w3 * np.ones_like(ed),
            (ey * w1 - ex * w2) * s * c / ed2,
        ],
        axis=-1,
    )
