"""Waypoint missions and the composite training-mission generator."""
from __future__ import annotations

import math
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from quadtune.utils import PathLike, make_rng, read_json, write_json

Point = Tuple[float, float, float]
Segment = Literal['short_hop', 'long_transit', 's_turn', 'climb_descent', 'hover_translate_hover']
SEGMENTS: Tuple[str, ...] = ('short_hop', 'long_transit', 's_turn', 'climb_descent', 'hover_translate_hover')


class Mission(BaseModel):
    name: str = 'mission'
    waypoints: List[Point] = Field(..., min_length=1)
    start: Point = (0.0, 0.0, 0.0)
    yaw: float = 0.0
    # Horizontal speed cap per waypoint leg, m/s.
    speed_hints: Optional[List[Optional[float]]] = None
    max_time: float = Field(150.0, gt=0.0)

    @field_validator('waypoints')
    @classmethod
    def _finite(cls, waypoints: List[Point]) -> List[Point]:
        if not np.all(np.isfinite(np.asarray(waypoints, dtype=float))):
            raise ValueError('Waypoints must be finite.')
        return waypoints

    @model_validator(mode='after')
    def _check_hints(self) -> Mission:
        if self.speed_hints is not None:
            if len(self.speed_hints) != len(self.waypoints):
                raise ValueError('Need one speed hint per waypoint.')
            if any(h is not None and h <= 0.0 for h in self.speed_hints):
                raise ValueError('Speed hints must be positive.')
        return self

    @property
    def n_waypoints(self) -> int:
        return len(self.waypoints)

    def points(self) -> np.ndarray:
        return np.asarray(self.waypoints, dtype=float)

    def leg_starts(self) -> np.ndarray:
        """Start point of every leg: the initial position, then each preceding waypoint."""
        return np.vstack([np.asarray(self.start, dtype=float), self.points()[:-1]])

    def leg_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.points() - self.leg_starts(), axis=1)

    def speed_hint(self, index: int) -> Optional[float]:
        return None if self.speed_hints is None else self.speed_hints[index]

    def path_length(self) -> float:
        return float(self.leg_lengths().sum())

    def save(self, path: PathLike):
        write_json(path, self)

    @classmethod
    def load(cls, path: PathLike) -> Mission:
        return cls.model_validate(read_json(path))


class SegmentMenu(BaseModel):
    segments: List[Segment] = Field(default_factory=lambda: list(SEGMENTS), min_length=1)
    altitude_range: Tuple[float, float] = (6.0, 14.0)
    speed_range: Tuple[float, float] = (4.0, 10.0)
    max_time: float = Field(150.0, gt=0.0)

    @model_validator(mode='after')
    def _check_ranges(self) -> SegmentMenu:
        for name in ['altitude_range', 'speed_range']:
            lo, hi = getattr(self, name)
            if not 0.0 < lo <= hi:
                raise ValueError(f'{name} must satisfy 0 < lo <= hi, got {(lo, hi)}.')
        return self


def _heading(rng: np.random.Generator) -> np.ndarray:
    a = rng.uniform(0.0, 2.0 * math.pi)
    return np.array([math.cos(a), math.sin(a), 0.0])


def _segment(kind: str, cur: np.ndarray, rng: np.random.Generator, menu: SegmentMenu) -> List[np.ndarray]:
    alt = rng.uniform(*menu.altitude_range)
    h = _heading(rng)
    n = np.array([-h[1], h[0], 0.0])
    level = np.array([cur[0], cur[1], alt])
    if kind == 'short_hop':
        return [level + rng.uniform(8.0, 15.0) * h]
    if kind == 'long_transit':
        return [level + rng.uniform(30.0, 50.0) * h]
    if kind == 's_turn':
        fwd, side = rng.uniform(10.0, 15.0), rng.uniform(4.0, 7.0)
        p1 = level + fwd * h + side * n
        p2 = p1 - fwd * h + side * n
        return [p1, p2, p2 + fwd * h + side * n]
    if kind == 'climb_descent':
        rise = rng.uniform(4.0, 8.0)
        top = level + rng.uniform(8.0, 12.0) * h + np.array([0.0, 0.0, rise])
        return [top, top + rng.uniform(8.0, 12.0) * h - np.array([0.0, 0.0, rise])]
    if kind == 'hover_translate_hover':
        far = level + rng.uniform(10.0, 20.0) * h
        return [level, far, far - np.array([0.0, 0.0, 2.0])]
    raise ValueError(f'Unknown segment {kind}.')


def build_composite_mission(menu: SegmentMenu, seed: int = 0, name: str = 'composite') -> Mission:
    """Concatenate the menu's segments, each starting where the previous one ended."""
    rng = make_rng(seed, 'mission')
    cur = np.zeros(3)
    waypoints, hints = list(), list()
    for kind in menu.segments:
        pts = _segment(kind, cur, rng, menu)
        speed = float(rng.uniform(*menu.speed_range))
        for p in pts:
            waypoints.append(tuple(float(v) for v in p))
            hints.append(speed)
        cur = pts[-1]
    return Mission(name=name, waypoints=waypoints, speed_hints=hints, max_time=menu.max_time)


def jitter_mission(mission: Mission, amount: float, rng: np.random.Generator, min_altitude: float = 1.0) -> Mission:
    """Uniformly perturb every waypoint but the last by up to `amount` metres per axis."""
    if amount <= 0.0 or mission.n_waypoints < 2:
        return mission
    pts = mission.points()
    pts[:-1] += rng.uniform(-amount, amount, size=pts[:-1].shape)
    pts[:-1, 2] = np.maximum(pts[:-1, 2], min_altitude)
    return mission.model_copy(update={'waypoints': [tuple(p) for p in pts.tolist()]})


def mission_summary(mission: Mission) -> Dict[str, float]:
    legs = mission.points() - mission.leg_starts()
    return {
        'n_waypoints': mission.n_waypoints,
        'path_length': mission.path_length(),
        'max_altitude': float(mission.points()[:, 2].max()),
        'max_climb': float(np.abs(legs[:, 2]).max()),
    }
