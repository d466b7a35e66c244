"""Search box, budgets, evaluation records and optimizer settings."""
from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from quadtune.control.gains import LOOP_NAMES, PARAM_NAMES, GainVector, SearchBounds
from quadtune.mission.cost import CostBreakdown


class SearchSpace(BaseModel):
    lower: List[float]
    upper: List[float]
    warm_start: Optional[List[float]] = None
    names: Optional[List[str]] = None
    # Loops pinned at the warm start. Only meaningful for gain spaces.
    frozen: List[str] = Field(default_factory=list)

    @model_validator(mode='after')
    def _check(self) -> SearchSpace:
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.size == 0 or lo.shape != hi.shape:
            raise ValueError(f'Bounds must be non-empty and of equal length, got {lo.size} and {hi.size}.')
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError('Bounds must be finite.')
        if np.any(lo > hi):
            raise ValueError('Lower bound exceeds upper bound.')
        if self.warm_start is not None:
            x = np.asarray(self.warm_start, dtype=float)
            if x.shape != lo.shape:
                raise ValueError(f'Warm start has {x.size} entries, the box has {lo.size}.')
            if np.any(x < lo) or np.any(x > hi):
                raise ValueError('Warm start lies outside the box.')
        if self.names is not None and len(self.names) != lo.size:
            raise ValueError('One name per dimension is required.')
        return self

    @property
    def dim(self) -> int:
        return len(self.lower)

    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.lower, dtype=float), np.asarray(self.upper, dtype=float)

    @property
    def width(self) -> np.ndarray:
        lo, hi = self.arrays()
        return hi - lo

    @property
    def active(self) -> np.ndarray:
        """Mask of the dimensions with a non-degenerate range."""
        return self.width > 0.0

    def warm_array(self) -> Optional[np.ndarray]:
        return None if self.warm_start is None else np.asarray(self.warm_start, dtype=float)

    def clip(self, x: np.ndarray) -> np.ndarray:
        lo, hi = self.arrays()
        return np.clip(x, lo, hi)

    def contains(self, x: np.ndarray) -> bool:
        lo, hi = self.arrays()
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= lo) and np.all(x <= hi))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        lo, hi = self.arrays()
        return lo + rng.random((n, self.dim)) * (hi - lo)

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        lo, _ = self.arrays()
        width = np.where(self.active, self.width, 1.0)
        return (np.asarray(x, dtype=float) - lo) / width

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        lo, _ = self.arrays()
        return self.clip(lo + np.asarray(u, dtype=float) * self.width)

    @classmethod
    def sphere(cls, dim: int, half_width: float = 5.0, warm_start: Optional[Sequence[float]] = None) -> SearchSpace:
        return cls(lower=[-half_width] * dim,
                   upper=[half_width] * dim,
                   warm_start=None if warm_start is None else list(warm_start))

    @classmethod
    def from_bounds(cls,
                    bounds: SearchBounds,
                    warm_start: Optional[GainVector] = None,
                    frozen: Sequence[str] = ()) -> SearchSpace:
        lo, hi = bounds.arrays()
        unknown = set(frozen) - set(LOOP_NAMES)
        if unknown:
            raise ValueError(f'Unknown loops to freeze: {sorted(unknown)}.')
        if frozen and warm_start is None:
            raise ValueError('Freezing loops requires a warm start.')
        x0 = None
        if warm_start is not None:
            x0 = warm_start.to_array()
            for loop in frozen:
                i = 3 * LOOP_NAMES.index(loop)
                lo[i:i + 3] = x0[i:i + 3]
                hi[i:i + 3] = x0[i:i + 3]
            x0 = x0.tolist()
        return cls(lower=lo.tolist(), upper=hi.tolist(), warm_start=x0, names=list(PARAM_NAMES), frozen=list(frozen))


class Budget(BaseModel):
    max_evals: Optional[int] = Field(None, ge=1)
    max_seconds: Optional[float] = Field(None, gt=0.0)

    @model_validator(mode='after')
    def _check(self) -> Budget:
        if self.max_evals is None and self.max_seconds is None:
            raise ValueError('A budget needs an evaluation count, a wall time, or both.')
        return self

    @classmethod
    def from_hours(cls, hours: float, max_evals: Optional[int] = None) -> Budget:
        return cls(max_evals=max_evals, max_seconds=3600.0 * hours)


class EvalRecord(BaseModel):
    gains: List[float]
    J: float
    breakdown: Optional[CostBreakdown] = None
    wall_time: float = 0.0
    seed: int = 0
    aborted: bool = False
    abort_reason: Optional[str] = None
    clipped: bool = False

    @field_validator('J')
    @classmethod
    def _finite(cls, value: float) -> float:
        if not np.isfinite(value):
            raise ValueError(f'Cost must be finite, got {value}.')
        return value

    def x(self) -> np.ndarray:
        return np.asarray(self.gains, dtype=float)

    def gain_vector(self) -> GainVector:
        return GainVector.from_array(self.gains)


class GaConfig(BaseModel):
    population: int = Field(30, ge=2)
    crossover_rate: float = Field(0.8, ge=0.0, le=1.0)
    mutation_rate: float = Field(0.1, ge=0.0, le=1.0)
    # Mutation standard deviation as a fraction of each box width.
    mutation_scale: float = Field(0.05, ge=0.0)
    mutation_decay: float = Field(0.98, gt=0.0, le=1.0)
    elitism: float = Field(0.1, ge=0.0, le=1.0)

    def n_elite(self) -> int:
        return min(self.population, int(np.ceil(self.elitism * self.population - 1e-9)))


class PsoConfig(BaseModel):
    swarm: int = Field(30, ge=2)
    chi: float = Field(0.7, ge=0.0)
    c1: float = Field(1.5, ge=0.0)
    c2: float = Field(1.5, ge=0.0)
    velocity_clamp: float = Field(0.2, gt=0.0)


class GwoConfig(BaseModel):
    pack: int = Field(30, ge=2)
    # Horizon of the a(t) schedule; derived from the evaluation budget when unset.
    max_iters: Optional[int] = Field(None, ge=1)


class BoConfig(BaseModel):
    n_init: int = Field(16, ge=1)
    pool: int = Field(4096, ge=2)
    max_history: int = Field(256, ge=2)
    local_fraction: float = Field(0.5, ge=0.0, le=1.0)
    local_scales: List[float] = Field(default_factory=lambda: [0.2, 0.05, 0.01, 0.002])
    noise: float = Field(1e-6, gt=0.0)
    xi: float = Field(0.01, ge=0.0)


class OptimizerConfig(BaseModel):
    ga: GaConfig = Field(default_factory=GaConfig)
    pso: PsoConfig = Field(default_factory=PsoConfig)
    gwo: GwoConfig = Field(default_factory=GwoConfig)
    bo: BoConfig = Field(default_factory=BoConfig)
    seed: int = 0
