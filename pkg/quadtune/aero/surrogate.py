"""Tabulated rotor performance over (rotor speed, axial freestream), interpolated bilinearly."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import optimize
from scipy.interpolate import RegularGridInterpolator

from quadtune.aero.bemt import RHO, RPM2RAD, RotorGeometry, RotorPerformance, bemt_solve
from quadtune.errors import ConvergenceError, DomainError, SurrogateBuildError
from quadtune.utils import PathLike, pbar, read_json, write_json

FIELDS = RotorPerformance.field_names()


@dataclass
class SurrogateStats:
    n_eval: int = 0
    n_clamped: int = 0


@dataclass(eq=False)
class SurrogateTable:
    omega_grid: np.ndarray
    v_grid: np.ndarray
    # Shape (len(FIELDS), len(omega_grid), len(v_grid)).
    values: np.ndarray
    stats: SurrogateStats = field(default_factory=SurrogateStats, compare=False, repr=False)

    def __post_init__(self):
        self.omega_grid = np.asarray(self.omega_grid, dtype=float)
        self.v_grid = np.asarray(self.v_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        for name, grid in [('omega_grid', self.omega_grid), ('v_grid', self.v_grid)]:
            if grid.ndim != 1 or grid.size == 0:
                raise DomainError(f'{name} must be a non-empty 1-D array.')
            if np.any(np.diff(grid) <= 0.0):
                raise DomainError(f'{name} must be strictly increasing.')
        expected = (len(FIELDS), self.omega_grid.size, self.v_grid.size)
        if self.values.shape != expected:
            raise DomainError(f'Value grid has shape {self.values.shape}, expected {expected}.')
        self._interp = None

    @property
    def shape(self) -> Tuple[int, int]:
        return self.omega_grid.size, self.v_grid.size

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[FIELDS.index(name)]

    def _interpolator(self) -> RegularGridInterpolator:
        if self._interp is None:
            grids = []
            values = np.moveaxis(self.values, 0, -1)
            for axis, grid in enumerate([self.omega_grid, self.v_grid]):
                # A single node is padded into a constant cell.
                if grid.size == 1:
                    grid = np.array([grid[0], grid[0] + 1.0])
                    values = np.concatenate([values, values], axis=axis)
                grids.append(grid)
            self._interp = RegularGridInterpolator(tuple(grids), values, method='linear')
        return self._interp

    def clamp(self, omega: np.ndarray, v_inf: np.ndarray) -> Tuple[np.ndarray, np.ndarray, int]:
        omega_c = np.clip(omega, self.omega_grid[0], self.omega_grid[-1])
        v_c = np.clip(v_inf, self.v_grid[0], self.v_grid[-1])
        n_clamped = int(np.count_nonzero((omega_c != omega) | (v_c != v_inf)))
        return omega_c, v_c, n_clamped

    def lookup(self, omega, v_inf) -> np.ndarray:
        """Vectorized lookup; returns an array of shape (n, len(FIELDS))."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        v_inf = np.broadcast_to(np.asarray(v_inf, dtype=float), omega.shape)
        omega_c, v_c, n_clamped = self.clamp(omega, v_inf)
        self.stats.n_eval += omega.size
        self.stats.n_clamped += n_clamped
        return self._interpolator()(np.stack([omega_c, v_c], axis=-1))

    def to_json(self) -> Dict:
        ret = {'omega_grid': self.omega_grid.tolist(), 'v_grid': self.v_grid.tolist()}
        for name, value in zip(FIELDS, self.values):
            ret[name] = value.reshape(-1).tolist()
        return ret

    @classmethod
    def from_json(cls, data: Dict) -> SurrogateTable:
        omega_grid = np.asarray(data['omega_grid'], dtype=float)
        v_grid = np.asarray(data['v_grid'], dtype=float)
        shape = (omega_grid.size, v_grid.size)
        values = np.stack([np.asarray(data[name], dtype=float).reshape(shape) for name in FIELDS])
        return cls(omega_grid, v_grid, values)

    def save(self, path: PathLike):
        write_json(path, self.to_json())

    @classmethod
    def load(cls, path: PathLike) -> SurrogateTable:
        return cls.from_json(read_json(path))


def surrogate_eval(table: SurrogateTable, omega: float, v_inf: float) -> RotorPerformance:
    row = table.lookup(omega, v_inf)[0]
    return RotorPerformance(*(float(x) for x in row))


def _solve_row(geom: RotorGeometry, omega: float, v_grid: np.ndarray, rho: float, i: int) -> np.ndarray:
    row = np.zeros([len(FIELDS), len(v_grid)])
    for j, v in enumerate(v_grid):
        try:
            perf = bemt_solve(geom, float(omega), float(v), rho)
        except ConvergenceError as e:
            raise SurrogateBuildError(e, (i, j)) from e
        row[:, j] = perf.as_tuple()
    return row


def build_surrogate(geom: RotorGeometry,
                    omega_grid: Sequence[float],
                    v_grid: Sequence[float],
                    rho: float = RHO,
                    workers: int = 1) -> SurrogateTable:
    omega_grid = np.asarray(omega_grid, dtype=float)
    v_grid = np.asarray(v_grid, dtype=float)
    if omega_grid.size == 0 or v_grid.size == 0:
        raise DomainError('Surrogate grids must be non-empty.')
    if np.any(np.diff(omega_grid) <= 0.0) or np.any(np.diff(v_grid) <= 0.0):
        raise DomainError('Surrogate grids must be strictly increasing.')

    values = np.zeros([len(FIELDS), omega_grid.size, v_grid.size])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_solve_row, geom, omega, v_grid, rho, i) for i, omega in enumerate(omega_grid)]
            for i, fut in enumerate(pbar(futures, 'aero table')):
                values[:, i] = fut.result()
    else:
        for i, omega in enumerate(pbar(omega_grid, 'aero table')):
            values[:, i] = _solve_row(geom, omega, v_grid, rho, i)
    logging.imp(f'Built a {omega_grid.size}x{v_grid.size} rotor table over '
                f'[{omega_grid[0]:g}, {omega_grid[-1]:g}] RPM x [{v_grid[0]:g}, {v_grid[-1]:g}] m/s.')
    return SurrogateTable(omega_grid, v_grid, values)


def smape(pred: np.ndarray, ref: np.ndarray) -> float:
    """Symmetric mean absolute percentage error; pairs that are both zero count as exact."""
    num = 2.0 * np.abs(pred - ref)
    den = np.abs(pred) + np.abs(ref)
    ratio = np.divide(num, den, out=np.zeros_like(num), where=den > 0.0)
    return float(100.0 * ratio.mean())


@dataclass
class ValidationReport:
    errors: pd.DataFrame
    solver_seconds: float
    table_seconds: float

    @property
    def speedup(self) -> float:
        return self.solver_seconds / max(self.table_seconds, 1e-12)


def validate_surrogate(table: SurrogateTable,
                       geom: RotorGeometry,
                       n: int = 1000,
                       rho: float = RHO,
                       rng: Optional[np.random.Generator] = None,
                       v_range: Optional[Tuple[float, float]] = None) -> ValidationReport:
    """Compare table lookups against direct solver calls at `n` random in-box points."""
    rng = rng or np.random.default_rng(0)
    lo_v, hi_v = v_range or (table.v_grid[0], table.v_grid[-1])
    omegas = rng.uniform(table.omega_grid[0], table.omega_grid[-1], n)
    vs = rng.uniform(lo_v, hi_v, n)

    start = time.perf_counter()
    ref = np.array([bemt_solve(geom, o, v, rho).as_tuple() for o, v in zip(omegas, vs)])
    solver_seconds = time.perf_counter() - start

    start = time.perf_counter()
    pred = np.array([surrogate_eval(table, o, v).as_tuple() for o, v in zip(omegas, vs)])
    table_seconds = time.perf_counter() - start

    records = list()
    for k, name in enumerate(FIELDS):
        diff = pred[:, k] - ref[:, k]
        records.append({
            'quantity': name,
            'smape': smape(pred[:, k], ref[:, k]),
            'rmse': float(np.sqrt(np.mean(diff**2))),
            'mae': float(np.mean(np.abs(diff)))
        })
    return ValidationReport(pd.DataFrame(records), solver_seconds, table_seconds)


def surrogate_hover_omega(table: SurrogateTable, thrust: float, v_inf: float = 0.0) -> float:
    """Rotor speed in RPM at which the table delivers `thrust`."""
    lo, hi = table.omega_grid[0], table.omega_grid[-1]

    def excess(omega: float) -> float:
        return surrogate_eval(table, omega, v_inf).thrust - thrust

    if excess(hi) < 0.0:
        raise DomainError(f'{thrust:.3f} N is out of reach within the table ({hi:g} RPM).')
    return float(optimize.brentq(excess, lo, hi))


def _fit_quadratic(table: SurrogateTable, name: str, hover_omega: float, spread: float, n: int) -> float:
    omega = np.linspace((1.0 - spread) * hover_omega, (1.0 + spread) * hover_omega, n)
    y = table.lookup(omega, 0.0)[:, FIELDS.index(name)]
    x = (omega * RPM2RAD)**2
    coef, *_ = np.linalg.lstsq(x[:, None], y, rcond=None)
    return float(coef[0])


def fit_thrust_constant(table: SurrogateTable, hover_omega: float, spread: float = 0.2, n: int = 41) -> float:
    """Least-squares k_T in T = k_T * w**2 (w in rad/s) around hover at zero climb rate."""
    return _fit_quadratic(table, 'thrust', hover_omega, spread, n)


def fit_drag_factor(table: SurrogateTable, hover_omega: float, spread: float = 0.2, n: int = 41) -> float:
    """Least-squares d in tau = d * w**2 around hover at zero climb rate."""
    return _fit_quadratic(table, 'torque', hover_omega, spread, n)
