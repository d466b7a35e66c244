"""Ground receiver grid: per-cell broadband SPL history under a moving source."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from quadtune.acoustics.bands import power_sum
from quadtune.acoustics.emission import DirectivityPattern
from quadtune.acoustics.propagation import AtmosphereConditions, absorption_coeff, spherical_spreading


class GridConfig(BaseModel):
    n: int = Field(20, ge=1)
    # Horizontal culling radius around the projected source; inf disables culling.
    radius: float = Field(14.0, gt=0.0)
    floor: float = 30.0
    # Receivers closer than this to the source are evaluated at this distance.
    min_distance: float = Field(1.0, gt=0.0)
    margin: float = Field(14.0, ge=0.0)


def down_axis(attitude: Optional[Sequence[float]]) -> np.ndarray:
    """World-frame direction of the rotor axis pointing away from the thrust."""
    if attitude is None:
        return np.array([0.0, 0.0, -1.0])
    phi, theta, psi = attitude
    sphi, cphi = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    spsi, cpsi = math.sin(psi), math.cos(psi)
    return -np.array([cpsi * sth * cphi + spsi * sphi, spsi * sth * cphi - cpsi * sphi, cth * cphi])


@dataclass(eq=False)
class GroundGrid:
    x: np.ndarray
    y: np.ndarray
    centers: np.ndarray
    config: GridConfig = field(default_factory=GridConfig)
    atmosphere: AtmosphereConditions = field(default_factory=AtmosphereConditions)
    directivity: Optional[DirectivityPattern] = None
    history: List[np.ndarray] = field(default_factory=list, repr=False)
    active: List[np.ndarray] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.centers = np.asarray(self.centers, dtype=float)
        n = self.config.n
        if self.x.shape != (n, ) or self.y.shape != (n, ):
            raise ValueError(f'Expected {n} centroids per axis.')
        self._xx, self._yy = np.meshgrid(self.x, self.y, indexing='ij')
        if self.atmosphere.absorption:
            self._alpha = absorption_coeff(self.centers, self.atmosphere)
        else:
            self._alpha = np.zeros(self.centers.size)
        self._di = None if self.directivity is None else self.directivity.table(self.centers)

    @classmethod
    def covering(cls, points, centers, config: Optional[GridConfig] = None, **kwargs) -> GroundGrid:
        """Square grid over the horizontal extent of `points`, widened by the margin."""
        config = config or GridConfig()
        points = np.atleast_2d(np.asarray(points, dtype=float))[:, :2]
        lo = points.min(axis=0) - config.margin
        hi = points.max(axis=0) + config.margin
        side = max(float(np.max(hi - lo)), 1e-6)
        mid = 0.5 * (lo + hi)
        offsets = (np.arange(config.n) + 0.5) * side / config.n - 0.5 * side
        return cls(mid[0] + offsets, mid[1] + offsets, centers, config, **kwargs)

    @property
    def n_steps(self) -> int:
        return len(self.history)

    def levels(self) -> np.ndarray:
        """SPL history, shape (n_steps, n, n)."""
        n = self.config.n
        return np.stack(self.history) if self.history else np.zeros((0, n, n))

    def mean_spl(self) -> np.ndarray:
        """Arithmetic mean over the cells active at each step; NaN where none were."""
        levels = self.levels()
        mask = np.stack(self.active) if self.active else np.zeros(levels.shape, dtype=bool)
        counts = mask.sum(axis=(1, 2))
        sums = np.where(mask, levels, 0.0).sum(axis=(1, 2))
        with np.errstate(invalid='ignore', divide='ignore'):
            return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)

    def to_frame(self, stride: int = 1, active_only: bool = True) -> pd.DataFrame:
        n = self.config.n
        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing='ij')
        frames = list()
        for t in range(0, self.n_steps, stride):
            keep = self.active[t] if active_only else np.ones((n, n), dtype=bool)
            frames.append(
                pd.DataFrame({
                    't_index': t,
                    'cell_i': ii[keep],
                    'cell_j': jj[keep],
                    'spl_db': self.history[t][keep].astype(float)
                }))
        if not frames:
            return pd.DataFrame(columns=['t_index', 'cell_i', 'cell_j', 'spl_db'])
        return pd.concat(frames, ignore_index=True)

    def summary(self) -> Dict[str, Any]:
        levels = self.levels()
        return {
            'n': self.config.n,
            'x': self.x.tolist(),
            'y': self.y.tolist(),
            'n_steps': self.n_steps,
            'mean_db': levels.mean(axis=0).tolist() if self.n_steps else None,
            'max_db': levels.max(axis=0).tolist() if self.n_steps else None,
        }


def grid_step(grid: GroundGrid, position: Sequence[float], source_levels, t_index: int, attitude=None) -> np.ndarray:
    """Propagate the source to every cell within the culling radius and record step `t_index`.

    `source_levels` is either the direction-free band spectrum of the whole vehicle or one
    row per rotor, power-summed here. Returns the recorded broadband levels.
    """
    cfg = grid.config
    src = np.asarray(source_levels, dtype=float)
    if src.ndim == 2:
        src = power_sum(src, axis=0)
    px, py, pz = (float(v) for v in position)
    dx = grid._xx - px
    dy = grid._yy - py
    horiz = np.hypot(dx, dy)
    active = horiz <= cfg.radius
    out = np.full(horiz.shape, cfg.floor)
    if np.any(active):
        d = np.maximum(np.hypot(horiz[active], pz), cfg.min_distance)
        spl = src - spherical_spreading(d)[:, None] - np.outer(d, grid._alpha)
        if grid._di is not None:
            ax, ay, az = down_axis(attitude)
            rx, ry = dx[active], dy[active]
            norms = np.maximum(np.sqrt(rx * rx + ry * ry + pz * pz), 1e-12)
            cos_zeta = np.clip((rx * ax + ry * ay - pz * az) / norms, -1.0, 1.0)
            cells = grid.directivity.cell_index(np.arccos(cos_zeta))
            spl = spl + grid._di[:, cells].T
        out[active] = power_sum(spl, axis=-1)
    if t_index < 0:
        raise ValueError(f'Negative step index {t_index}.')
    while len(grid.history) < t_index:
        grid.history.append(np.full(horiz.shape, cfg.floor, dtype=np.float32))
        grid.active.append(np.zeros(horiz.shape, dtype=bool))
    if t_index < len(grid.history):
        grid.history[t_index] = out.astype(np.float32)
        grid.active[t_index] = active
    else:
        grid.history.append(out.astype(np.float32))
        grid.active.append(active)
    return out
