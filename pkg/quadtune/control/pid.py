from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from quadtune.control.gains import PidGains

KI_FLOOR = 1e-6


@dataclass
class PidState:
    integral: float = 0.0
    prev_error: Optional[float] = None
    # Bound on |integral|, not on the integral term.
    clamp: float = float('inf')

    @classmethod
    def for_limit(cls, limit: float, ki: float) -> PidState:
        """Integral clamp that caps the integral term at `limit` of control authority."""
        return cls(clamp=limit / max(ki, KI_FLOOR))

    def reset(self):
        self.integral = 0.0
        self.prev_error = None


def pid_update(pid: PidState, gains: PidGains, error: float, dt: float) -> float:
    if dt <= 0.0:
        raise ValueError(f'dt must be positive, got {dt}.')
    pid.integral = min(max(pid.integral + error * dt, -pid.clamp), pid.clamp)
    deriv = 0.0 if pid.prev_error is None else (error - pid.prev_error) / dt
    pid.prev_error = error
    return gains.kp * error + gains.ki * pid.integral + gains.kd * deriv
