"""Reduced 4-state kinematics of an underactuated underwater vehicle.

The vehicle is actuated in surge, heave and yaw; sway is unactuated and shows
up, together with ocean currents, as a bounded additive disturbance on the
first three state derivatives.  A fixed-step RK4 integrator provides the
ground-truth plant for closed-loop simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


def wrap_angle(psi: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(psi + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class VehicleState:
    """Inertial pose: position in meters, yaw in radians, wrapped to (-pi, pi]."""

    x: float
    y: float
    z: float
    psi: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.psi])

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "VehicleState":
        return cls(float(arr[0]), float(arr[1]), float(arr[2]), wrap_angle(float(arr[3])))


@dataclass(frozen=True)
class BodyVelocity:
    """Actuated body velocities: surge u, heave w, yaw rate r."""

    u: float
    w: float
    r: float

    @property
    def array(self) -> np.ndarray:
        return np.array([self.u, self.w, self.r])

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "BodyVelocity":
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))


@dataclass(frozen=True)
class VelocityBox:
    """Per-axis symmetric input bounds with the derived total speed bound."""

    u_max: float
    w_max: float
    r_max: float

    def __post_init__(self):
        if min(self.u_max, self.w_max, self.r_max) <= 0.0:
            raise ValueError("velocity bounds must be positive")

    @property
    def v_bar(self) -> float:
        return math.sqrt(self.u_max**2 + self.w_max**2 + self.r_max**2)

    @property
    def array(self) -> np.ndarray:
        return np.array([self.u_max, self.w_max, self.r_max])

    def contains(self, v: BodyVelocity, tol: float = 0.0) -> bool:
        return (
            abs(v.u) <= self.u_max + tol
            and abs(v.w) <= self.w_max + tol
            and abs(v.r) <= self.r_max + tol
        )

    def clamp(self, v: BodyVelocity) -> BodyVelocity:
        return BodyVelocity(
            min(max(v.u, -self.u_max), self.u_max),
            min(max(v.w, -self.w_max), self.w_max),
            min(max(v.r, -self.r_max), self.r_max),
        )


def kinematics(state: VehicleState, inp: BodyVelocity, omega: np.ndarray) -> np.ndarray:
    """Perturbed state derivative [u cos(psi) + w1, u sin(psi) + w2, w + w3, r].

    ``omega`` is the total additive disturbance (current plus sway coupling);
    its yaw component must be zero.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (4,):
        raise ValueError("omega must be a 4-vector")
    if omega[3] != 0.0:
        raise ValueError("disturbance has no yaw component")
    vals = (state.x, state.y, state.z, state.psi, inp.u, inp.w, inp.r)
    if not all(math.isfinite(v) for v in vals) or not np.isfinite(omega).all():
        raise ValueError("non-finite state, input or disturbance")
    c, s = math.cos(state.psi), math.sin(state.psi)
    return np.array(
        [inp.u * c + omega[0], inp.u * s + omega[1], inp.w + omega[2], inp.r]
    )


def sway_coupling(state: VehicleState, sway_speed: float, sway_bound: float | None = None) -> np.ndarray:
    """Disturbance column produced by the unactuated sway velocity.

    Returns [-sin(psi), cos(psi), 0, 0] * sway_speed; the norm equals
    |sway_speed| for every heading.
    """
    if sway_bound is not None and abs(sway_speed) > sway_bound:
        raise ValueError(
            f"sway speed {sway_speed} exceeds its bound {sway_bound}"
        )
    return np.array(
        [-math.sin(state.psi) * sway_speed, math.cos(state.psi) * sway_speed, 0.0, 0.0]
    )


@dataclass
class DisturbanceModel:
    """Time-parameterized current plus an optional exogenous sway signal.

    ``current`` maps time to the 3-vector of current velocities.  The sway
    signal (if any) is folded through the heading-dependent coupling column,
    so the total disturbance is state dependent.  ``total_bound`` is the
    certified bound on the Euclidean norm of the combined 4-vector.
    """

    current: Callable[[float], np.ndarray]
    sway_bound: float = 0.0
    total_bound: float = 0.0
    sway_signal: Callable[[float], float] | None = None

    def omega(self, t: float, state: VehicleState) -> np.ndarray:
        out = np.zeros(4)
        out[:3] = self.current(t)
        if self.sway_signal is not None:
            out += sway_coupling(state, self.sway_signal(t), self.sway_bound)
        return out

    @classmethod
    def none(cls) -> "DisturbanceModel":
        return cls(current=lambda t: np.zeros(3), total_bound=0.0)

    @classmethod
    def sinusoidal(cls, amplitude: float = 0.1, period: float = 15.0) -> "DisturbanceModel":
        """Slowly varying sea current: the first and third axes share phase.

        omega = [A sin(2 pi t / T), A cos(2 pi t / T), A sin(2 pi t / T), 0],
        whose norm peaks at A * sqrt(2).
        """
        rate = 2.0 * math.pi / period

        def current(t: float) -> np.ndarray:
            s, c = math.sin(rate * t), math.cos(rate * t)
            return np.array([amplitude * s, amplitude * c, amplitude * s])

        return cls(current=current, total_bound=amplitude * math.sqrt(2.0))

    @classmethod
    def steady_current(cls, speed: float, bearing: float, inclination: float) -> "DisturbanceModel":
        """Constant current of magnitude ``speed``, direction given by the
        bearing in the x-y plane and the inclination from the z axis."""

        vec = np.array(
            [
                speed * math.cos(bearing) * math.sin(inclination),
                speed * math.sin(bearing) * math.sin(inclination),
                speed * math.cos(inclination),
            ]
        )
        return cls(current=lambda t: vec.copy(), total_bound=abs(speed))

    @classmethod
    def random_fourier(
        cls, omega_bar: float, seed: int, n_modes: int = 3, max_rate: float = 1.0
    ) -> "DisturbanceModel":
        """Seeded random smooth disturbance with norm at most ``omega_bar``.

        A handful of random sinusoidal modes per axis, rescaled so the
        worst-case amplitude sum stays within the bound.
        """
        rng = np.random.Generator(np.random.PCG64(seed))
        amps = rng.normal(size=(3, n_modes))
        rates = rng.uniform(0.1, max_rate, size=(3, n_modes))
        phases = rng.uniform(0.0, 2.0 * math.pi, size=(3, n_modes))
        # Hard amplitude budget: sum_i |a_ji| per axis, then the axis norms.
        axis_peak = np.abs(amps).sum(axis=1)
        scale = omega_bar / max(float(np.linalg.norm(axis_peak)), 1e-30)
        amps = amps * scale

        def current(t: float) -> np.ndarray:
            return (amps * np.sin(rates * t + phases)).sum(axis=1)

        return cls(current=current, total_bound=omega_bar)


def current_disturbance(t: float, model: DisturbanceModel) -> np.ndarray:
    """Current disturbance as a 4-vector (yaw component identically zero)."""
    if t < 0.0:
        raise ValueError("time must be nonnegative")
    out = np.zeros(4)
    out[:3] = model.current(t)
    return out


DisturbanceFn = Callable[[float, VehicleState], np.ndarray]


def step(
    state: VehicleState,
    inp: BodyVelocity,
    disturbance: DisturbanceFn | None,
    t: float,
    dt: float,
    substeps: int = 1,
) -> VehicleState:
    """Classical RK4 step(s) of the perturbed kinematics with a held input.

    The input is constant over the whole interval; the disturbance may vary
    continuously and is sampled at the RK4 stage times.
    """
    if dt <= 0.0 or substeps < 1:
        raise ValueError("dt must be positive and substeps >= 1")

    def deriv(ti: float, arr: np.ndarray) -> np.ndarray:
        st = VehicleState(arr[0], arr[1], arr[2], arr[3])
        om = disturbance(ti, st) if disturbance is not None else np.zeros(4)
        return kinematics(st, inp, om)

    h = dt / substeps
    arr = state.array
    ti = t
    for _ in range(substeps):
        k1 = deriv(ti, arr)
        k2 = deriv(ti + 0.5 * h, arr + 0.5 * h * k1)
        k3 = deriv(ti + 0.5 * h, arr + 0.5 * h * k2)
        k4 = deriv(ti + h, arr + h * k3)
        arr = arr + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ti += h
        if not np.isfinite(arr).all():
            raise FloatingPointError("state propagation produced non-finite values")
    return VehicleState.from_array(arr)
