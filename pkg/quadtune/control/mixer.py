"""Mapping between collective thrust plus body moments and per-rotor speeds, "+" layout.

Rotor 1 sits on -x, 2 on -y, 3 on +x, 4 on +y; rotors 1 and 3 share a spin direction.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, Field

RAD2RPM = 60.0 / (2.0 * math.pi)


class ControlCommand(NamedTuple):
    u1: float
    u2: float
    u3: float
    u4: float


class MixerParams(BaseModel):
    arm_length: float = Field(0.32, gt=0.0)
    # Dimensional, T = k_T * w**2 with w in rad/s.
    thrust_constant: float = Field(..., gt=0.0)
    # tau = d * w**2.
    drag_factor: float = Field(..., gt=0.0)
    max_omega: float = Field(3000.0 / RAD2RPM, gt=0.0)

    @property
    def max_thrust(self) -> float:
        return self.thrust_constant * self.max_omega**2

    def command_limits(self) -> ControlCommand:
        w2 = self.max_omega**2
        return ControlCommand(u1=4.0 * self.thrust_constant * w2,
                              u2=self.arm_length * self.thrust_constant * w2,
                              u3=self.arm_length * self.thrust_constant * w2,
                              u4=2.0 * self.drag_factor * w2)

    def saturate(self, cmd: ControlCommand) -> ControlCommand:
        lim = self.command_limits()
        return ControlCommand(u1=min(max(cmd.u1, 0.0), lim.u1),
                              u2=min(max(cmd.u2, -lim.u2), lim.u2),
                              u3=min(max(cmd.u3, -lim.u3), lim.u3),
                              u4=min(max(cmd.u4, -lim.u4), lim.u4))


def allocation_matrix(arm_length: float, yaw_ratio: float) -> np.ndarray:
    l, c = arm_length, yaw_ratio
    return np.array([
        [1.0, 1.0, 1.0, 1.0],
        [0.0, -l, 0.0, l],
        [-l, 0.0, l, 0.0],
        [c, -c, c, -c],
    ])


@lru_cache(maxsize=32)
def _inverse(arm_length: float, yaw_ratio: float) -> np.ndarray:
    return np.linalg.inv(allocation_matrix(arm_length, yaw_ratio))


def rotor_thrusts(cmd: ControlCommand, mixer: MixerParams) -> np.ndarray:
    """Unclipped per-rotor thrusts that realize `cmd`."""
    inv = _inverse(mixer.arm_length, mixer.drag_factor / mixer.thrust_constant)
    return inv @ np.asarray(cmd, dtype=float)


def mix(cmd: ControlCommand, mixer: MixerParams) -> np.ndarray:
    """Rotor speeds in RPM."""
    omega_sq = rotor_thrusts(cmd, mixer) / mixer.thrust_constant
    omega_sq = np.clip(omega_sq, 0.0, mixer.max_omega**2)
    return np.sqrt(omega_sq) * RAD2RPM


def thrusts_to_controls(thrusts: Sequence[float], mixer: MixerParams) -> ControlCommand:
    a = allocation_matrix(mixer.arm_length, mixer.drag_factor / mixer.thrust_constant)
    return ControlCommand(*(float(u) for u in a @ np.asarray(thrusts, dtype=float)))
