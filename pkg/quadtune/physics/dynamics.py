"""Rigid-body quadrotor dynamics with Euler-angle attitude, integrated by fixed-step RK4.

The integrated state is the 12-vector
    (x, y, z, vx, vy, vz, phi, theta, psi, p, q, r)
while rotor speeds are held by the caller across a step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from quadtune.errors import DomainError, SimulationDiverged

Vec3 = Tuple[float, float, float]

KINEMATIC_TILT_LIMIT = math.radians(89.0)


class VehicleParams(BaseModel):
    mass: float = Field(5.2, gt=0.0)
    inertia: Vec3 = (3.8e-3, 3.8e-3, 7.1e-3)
    arm_length: float = Field(0.32, gt=0.0)
    rotor_inertia: float = Field(6e-5, ge=0.0)
    linear_drag: Vec3 = (0.1, 0.1, 0.15)
    angular_damping: Vec3 = (0.1, 0.1, 0.15)
    drag_factor: float = Field(7.5e-7, gt=0.0)
    gravity: float = Field(9.81, gt=0.0)

    @model_validator(mode='after')
    def _check_inertia(self) -> VehicleParams:
        if min(self.inertia) <= 0.0:
            raise ValueError(f'Inertias must be positive, got {self.inertia}.')
        return self

    @property
    def weight(self) -> float:
        return self.mass * self.gravity


@dataclass
class VehicleState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    attitude: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rates: np.ndarray = field(default_factory=lambda: np.zeros(3))
    # rad/s
    rotor_speeds: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        for name in ['position', 'velocity', 'attitude', 'rates', 'rotor_speeds']:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity, self.attitude, self.rates])

    @classmethod
    def from_array(cls, y: np.ndarray, rotor_speeds: Optional[np.ndarray] = None) -> VehicleState:
        rotor_speeds = np.zeros(4) if rotor_speeds is None else rotor_speeds
        return cls(y[0:3].copy(), y[3:6].copy(), y[6:9].copy(), y[9:12].copy(), np.array(rotor_speeds, dtype=float))

    def copy(self) -> VehicleState:
        return VehicleState.from_array(self.to_array(), self.rotor_speeds)


class BodyInputs(NamedTuple):
    """Collective thrust and body moments held over one integration step."""
    thrust: float
    u2: float
    u3: float
    u4: float
    omega_diff: float


@dataclass
class RotorInputs:
    thrusts: np.ndarray
    torques: np.ndarray
    # rad/s
    omega: np.ndarray
    thrust_turb: float = 0.0

    def body_inputs(self, arm_length: float) -> BodyInputs:
        t1, t2, t3, t4 = (float(t) for t in self.thrusts)
        q1, q2, q3, q4 = (float(q) for q in self.torques)
        w1, w2, w3, w4 = (float(w) for w in self.omega)
        return BodyInputs(thrust=t1 + t2 + t3 + t4 + self.thrust_turb,
                          u2=arm_length * (t4 - t2),
                          u3=arm_length * (t3 - t1),
                          u4=q1 - q2 + q3 - q4,
                          omega_diff=w1 - w2 + w3 - w4)


@dataclass
class KinematicsStats:
    n_tilt_clamped: int = 0


def translational_accel(state: VehicleState, thrust_total: float, params: VehicleParams) -> np.ndarray:
    phi, theta, psi = state.attitude
    return np.array(_translational(phi, theta, psi, *state.velocity, thrust_total, params))


def _translational(phi, theta, psi, vx, vy, vz, thrust, params: VehicleParams):
    m = params.mass
    cdx, cdy, cdz = params.linear_drag
    sphi, cphi = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    spsi, cpsi = math.sin(psi), math.cos(psi)
    t_m = thrust / m
    ax = t_m * (cpsi * sth * cphi + spsi * sphi) - cdx * vx / m
    ay = t_m * (spsi * sth * cphi - cpsi * sphi) - cdy * vy / m
    az = t_m * cth * cphi - params.gravity - cdz * vz / m
    return ax, ay, az


def rotational_accel(state: VehicleState, u2: float, u3: float, u4: float, omega_diff: float,
                     params: VehicleParams) -> np.ndarray:
    return np.array(_rotational(*state.rates, u2, u3, u4, omega_diff, params))


def _sq(x: float) -> float:
    return math.copysign(x * x, x)


def _rotational(p, q, r, u2, u3, u4, omega_diff, params: VehicleParams):
    ix, iy, iz = params.inertia
    cax, cay, caz = params.angular_damping
    jr = params.rotor_inertia
    p_dot = (u2 - cax * _sq(p) - jr * omega_diff * q - (iz - iy) * q * r) / ix
    q_dot = (u3 - cay * _sq(q) + jr * omega_diff * p - (ix - iz) * p * r) / iy
    r_dot = (u4 - caz * _sq(r) - (iy - ix) * p * q) / iz
    return p_dot, q_dot, r_dot


def euler_rates(phi: float, theta: float, p: float, q: float, r: float,
                stats: Optional[KinematicsStats] = None) -> Vec3:
    """z-y-x body-rate to Euler-rate map; pitch is clamped just short of gimbal lock."""
    if abs(theta) > KINEMATIC_TILT_LIMIT:
        theta = math.copysign(KINEMATIC_TILT_LIMIT, theta)
        if stats is not None:
            stats.n_tilt_clamped += 1
    sphi, cphi = math.sin(phi), math.cos(phi)
    cth, tth = math.cos(theta), math.tan(theta)
    phi_dot = p + sphi * tth * q + cphi * tth * r
    theta_dot = cphi * q - sphi * r
    psi_dot = (sphi * q + cphi * r) / cth
    return phi_dot, theta_dot, psi_dot


def state_derivative(y: np.ndarray, inputs: BodyInputs, params: VehicleParams,
                     stats: Optional[KinematicsStats] = None) -> np.ndarray:
    _, _, _, vx, vy, vz, phi, theta, psi, p, q, r = y.tolist()
    acc = _translational(phi, theta, psi, vx, vy, vz, inputs.thrust, params)
    att = euler_rates(phi, theta, p, q, r, stats)
    ang = _rotational(p, q, r, inputs.u2, inputs.u3, inputs.u4, inputs.omega_diff, params)
    return np.array([vx, vy, vz, *acc, *att, *ang])


def rk4(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step(state: VehicleState,
             inputs: BodyInputs,
             h: float,
             params: VehicleParams,
             step: int = 0,
             stats: Optional[KinematicsStats] = None) -> VehicleState:
    if h <= 0.0:
        raise DomainError(f'Step size must be positive, got {h}.')
    try:
        with np.errstate(over='ignore', invalid='ignore'):
            y = rk4(lambda z: state_derivative(z, inputs, params, stats), state.to_array(), h)
    except (ValueError, OverflowError) as e:
        raise SimulationDiverged(step, str(e)) from e
    if not np.all(np.isfinite(y)):
        raise SimulationDiverged(step)
    return VehicleState.from_array(y, state.rotor_speeds)
