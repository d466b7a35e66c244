"""Three-loop cascade: position -> velocity -> attitude, with hover feed-forward on thrust."""
from __future__ import annotations

import math
from typing import Dict, NamedTuple, Optional, Sequence

from pydantic import BaseModel, Field

from quadtune.control.gains import GainVector
from quadtune.control.mixer import ControlCommand, MixerParams
from quadtune.control.pid import PidState, pid_update
from quadtune.physics.dynamics import VehicleParams, VehicleState


class ControllerLimits(BaseModel):
    max_tilt_deg: float = Field(30.0, gt=0.0, lt=90.0)
    max_yaw_error_deg: float = Field(30.0, gt=0.0)
    max_speed_xy: float = Field(13.89, gt=0.0)
    max_speed_z: float = Field(5.56, gt=0.0)
    min_tilt_cos: float = Field(0.5, gt=0.0, le=1.0)

    @property
    def max_tilt(self) -> float:
        return math.radians(self.max_tilt_deg)


class Setpoint(NamedTuple):
    position: Sequence[float]
    yaw: float = 0.0
    # Per-leg horizontal speed cap.
    speed_hint: Optional[float] = None


# Probe overrides replace an intermediate setpoint inside the cascade.
PROBE_KEYS = ('roll', 'vx', 'vz')


def wrap_angle(x: float) -> float:
    return (x + math.pi) % (2.0 * math.pi) - math.pi


def _clip(x: float, limit: float) -> float:
    return min(max(x, -limit), limit)


class CascadeController:

    def __init__(self,
                 gains: GainVector,
                 vehicle: VehicleParams,
                 mixer: MixerParams,
                 limits: Optional[ControllerLimits] = None):
        self.gains = gains
        self.vehicle = vehicle
        self.mixer = mixer
        self.limits = limits or ControllerLimits()
        self.reset()

    def reset(self):
        g = self.vehicle.gravity
        lim = self.limits
        authority = self.mixer.command_limits()
        acc_xy = g * math.tan(lim.max_tilt)
        gains = self.gains
        self.pids: Dict[str, PidState] = {
            'x': PidState.for_limit(lim.max_speed_xy, gains.pos_xy.ki),
            'y': PidState.for_limit(lim.max_speed_xy, gains.pos_xy.ki),
            'z': PidState.for_limit(lim.max_speed_z, gains.alt.ki),
            'vx': PidState.for_limit(acc_xy, gains.vel_xy.ki),
            'vy': PidState.for_limit(acc_xy, gains.vel_xy.ki),
            'vz': PidState.for_limit(g, gains.vel_z.ki),
            'roll': PidState.for_limit(authority.u2, gains.att.ki),
            'pitch': PidState.for_limit(authority.u3, gains.att.ki),
            'yaw': PidState.for_limit(authority.u4, gains.att.ki),
        }

    def step(self,
             state: VehicleState,
             setpoint: Setpoint,
             dt: float,
             probe: Optional[Dict[str, float]] = None) -> ControlCommand:
        gains = self.gains
        lim = self.limits
        probe = probe or dict()
        g = self.vehicle.gravity
        x, y, z = state.position
        vx, vy, vz = state.velocity
        phi, theta, psi = state.attitude
        tx, ty, tz = setpoint.position

        # Outer loop: position errors to bounded velocity setpoints.
        vx_d = pid_update(self.pids['x'], gains.pos_xy, tx - x, dt)
        vy_d = pid_update(self.pids['y'], gains.pos_xy, ty - y, dt)
        vz_d = _clip(pid_update(self.pids['z'], gains.alt, tz - z, dt), lim.max_speed_z)
        cap = lim.max_speed_xy if setpoint.speed_hint is None else min(lim.max_speed_xy, setpoint.speed_hint)
        speed = math.hypot(vx_d, vy_d)
        if speed > cap:
            vx_d, vy_d = vx_d * cap / speed, vy_d * cap / speed
        vx_d = probe.get('vx', vx_d)
        vz_d = probe.get('vz', vz_d)

        # Middle loop: velocity errors to accelerations, then to tilt setpoints and thrust.
        ax = pid_update(self.pids['vx'], gains.vel_xy, vx_d - vx, dt)
        ay = pid_update(self.pids['vy'], gains.vel_xy, vy_d - vy, dt)
        az = pid_update(self.pids['vz'], gains.vel_z, vz_d - vz, dt)
        spsi, cpsi = math.sin(psi), math.cos(psi)
        theta_d = _clip((ax * cpsi + ay * spsi) / g, lim.max_tilt)
        phi_d = _clip((ax * spsi - ay * cpsi) / g, lim.max_tilt)
        phi_d = probe.get('roll', phi_d)

        tilt = max(math.cos(phi) * math.cos(theta), lim.min_tilt_cos)
        u1 = self.vehicle.mass * (g + az) / tilt

        # Inner loop: attitude errors to body moments; yaw shares the attitude gains.
        yaw_err = _clip(wrap_angle(setpoint.yaw - psi), math.radians(lim.max_yaw_error_deg))
        u2 = pid_update(self.pids['roll'], gains.att, phi_d - phi, dt)
        u3 = pid_update(self.pids['pitch'], gains.att, theta_d - theta, dt)
        u4 = pid_update(self.pids['yaw'], gains.att, yaw_err, dt)
        return self.mixer.saturate(ControlCommand(u1, u2, u3, u4))


def cascade_step(state: VehicleState,
                 setpoint: Setpoint,
                 gains: GainVector,
                 dt: float,
                 vehicle: VehicleParams,
                 mixer: MixerParams,
                 limits: Optional[ControllerLimits] = None) -> ControlCommand:
    """One control update from zeroed integrators."""
    return CascadeController(gains, vehicle, mixer, limits).step(state, setpoint, dt)
