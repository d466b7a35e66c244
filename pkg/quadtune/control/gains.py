from __future__ import annotations

from typing import Dict, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from quadtune.utils import PathLike, read_json, write_json

LOOP_NAMES = ('pos_xy', 'alt', 'att', 'vel_xy', 'vel_z')
TERM_NAMES = ('kp', 'ki', 'kd')
PARAM_NAMES = tuple(f'{loop}.{term}' for loop in LOOP_NAMES for term in TERM_NAMES)


class PidGains(BaseModel):
    kp: float = Field(0.0, ge=0.0)
    ki: float = Field(0.0, ge=0.0)
    kd: float = Field(0.0, ge=0.0)

    def scaled(self, factor: float) -> PidGains:
        return PidGains(kp=self.kp * factor, ki=self.ki * factor, kd=self.kd * factor)


class GainVector(BaseModel):
    """The full cascade gain stack. Roll, pitch and yaw share `att`."""

    pos_xy: PidGains = Field(default_factory=PidGains)
    alt: PidGains = Field(default_factory=PidGains)
    att: PidGains = Field(default_factory=PidGains)
    vel_xy: PidGains = Field(default_factory=PidGains)
    vel_z: PidGains = Field(default_factory=PidGains)

    def to_array(self) -> np.ndarray:
        return np.array([getattr(getattr(self, loop), term) for loop in LOOP_NAMES for term in TERM_NAMES])

    @classmethod
    def from_array(cls, x) -> GainVector:
        x = np.asarray(x, dtype=float)
        if x.shape != (len(PARAM_NAMES), ):
            raise ValueError(f'Expected {len(PARAM_NAMES)} gains, got shape {x.shape}.')
        # Round-off from the optimizers can leave tiny negatives after clipping.
        x = np.maximum(x, 0.0)
        kwargs = dict()
        for i, loop in enumerate(LOOP_NAMES):
            kp, ki, kd = x[3 * i:3 * i + 3]
            kwargs[loop] = PidGains(kp=float(kp), ki=float(ki), kd=float(kd))
        return cls(**kwargs)

    def replace(self, **loops: PidGains) -> GainVector:
        return self.model_copy(update=loops)

    def save(self, path: PathLike):
        write_json(path, self)

    @classmethod
    def load(cls, path: PathLike) -> GainVector:
        return cls.model_validate(read_json(path))


REFERENCE_GAINS = GainVector(pos_xy=PidGains(kp=0.8, ki=0.01, kd=0.02),
                             alt=PidGains(kp=1.0, ki=0.05, kd=0.02),
                             att=PidGains(kp=0.8, ki=0.05, kd=0.08),
                             vel_xy=PidGains(kp=2.0, ki=0.1, kd=0.01),
                             vel_z=PidGains(kp=4.0, ki=0.5, kd=0.02))


class SearchBounds(BaseModel):
    """Box [lower, upper] over the gain stack, stored with the same shape as a gains file."""

    lower: GainVector
    upper: GainVector

    @model_validator(mode='after')
    def _check_order(self) -> SearchBounds:
        bad = [name for name, lo, hi in zip(PARAM_NAMES, self.lower.to_array(), self.upper.to_array()) if lo > hi]
        if bad:
            raise ValueError(f'Lower bound exceeds upper bound for {bad}.')
        return self

    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.lower.to_array(), self.upper.to_array()

    @classmethod
    def around(cls, center: GainVector, low: float = 0.5, high: float = 1.5) -> SearchBounds:
        x = center.to_array()
        return cls(lower=GainVector.from_array(low * x), upper=GainVector.from_array(high * x))

    @classmethod
    def load(cls, path: PathLike) -> SearchBounds:
        return cls.model_validate(read_json(path))

    def save(self, path: PathLike):
        write_json(path, self)


def gains_to_dict(gains: GainVector) -> Dict[str, float]:
    return dict(zip(PARAM_NAMES, gains.to_array().tolist()))
