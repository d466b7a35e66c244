"""Composite mission cost, weight calibration and the early-abort rules."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from quadtune.errors import ConfigurationError
from quadtune.mission.mission import Mission

if TYPE_CHECKING:
    from quadtune.mission.simulator import FlightLog

TERMS = ('t', 'd', 'o', 'to', 'c', 'os', 'p', 'n')
CALIBRATED = ('t', 'd', 'o', 'to', 'os', 'p', 'n')
TABLE_LABELS: Dict[str, str] = {
    'total': 'Total cost',
    'c_t': 'Mission time cost',
    'c_d': 'Final position cost',
    'c_o': 'Attitude oscillation cost',
    'c_to': 'Thrust oscillation cost',
    'c_c': 'Completion cost',
    'c_os': 'Overshoot cost',
    'c_p': 'Power cost',
    'c_n': 'Noise proxy cost (SWL-based)',
    'c_nm': 'No-movement cost',
    'c_ab': 'Early-abort cost',
}

ABORT_DIVERGED = 'diverged'
ABORT_NO_MOVEMENT = 'no_movement'
ABORT_FIRST_WAYPOINT = 'first_waypoint_timeout'


class CostWeights(BaseModel):
    w_t: float = Field(1.0, ge=0.0)
    w_d: float = Field(1.0, ge=0.0)
    w_o: float = Field(1.0, ge=0.0)
    w_to: float = Field(1.0, ge=0.0)
    w_c: float = Field(1.0, ge=0.0)
    w_os: float = Field(1.0, ge=0.0)
    w_p: float = Field(1.0, ge=0.0)
    w_n: float = Field(1.0, ge=0.0)
    gamma_d: float = Field(0.5, gt=0.0, le=1.0)
    p_c: float = Field(1000.0, ge=0.0)
    p_nm: float = Field(1000.0, ge=0.0)
    # Charged when a rollout is cut short for divergence or the first-waypoint timeout.
    p_abort: float = Field(1000.0, ge=0.0)
    epsilon: float = Field(0.05, ge=0.0)
    noise_order: float = Field(4.0, ge=1.0)
    # SWL series are divided by this level (dB) before the norm.
    noise_ref: float = Field(85.0, gt=0.0)
    # Drop the thrust-oscillation term from the total.
    strict_eq15: bool = False
    # Power term as energy (sum of P*dt) instead of the bare sum of P.
    energy_mode: bool = True

    def effective(self) -> Dict[str, float]:
        """Weights as they enter the total, keyed by term name."""
        out = {name: getattr(self, f'w_{name}') for name in TERMS}
        if self.strict_eq15:
            out['to'] = 0.0
        return out

    def scaled(self, factor: float) -> CostWeights:
        return self.model_copy(update={f'w_{name}': factor * getattr(self, f'w_{name}') for name in TERMS})


class CostBreakdown(BaseModel):
    c_t: float = 0.0
    c_d: float = 0.0
    c_o: float = 0.0
    c_to: float = 0.0
    c_c: float = 0.0
    c_os: float = 0.0
    c_p: float = 0.0
    c_n: float = 0.0
    c_nm: float = 0.0
    c_ab: float = 0.0
    total: float = 0.0

    def term(self, name: str) -> float:
        return getattr(self, f'c_{name}')

    def weighted_terms(self, weights: CostWeights) -> Dict[str, float]:
        w = weights.effective()
        return {name: w[name] * self.term(name) for name in TERMS}

    def to_row(self, labels: bool = False) -> Dict[str, float]:
        row = self.model_dump()
        if labels:
            row = {TABLE_LABELS[k]: v for k, v in row.items()}
        return row

    def to_frame(self) -> pd.DataFrame:
        keys = ['total'] + [f'c_{name}' for name in TERMS] + ['c_nm', 'c_ab']
        return pd.DataFrame({'term': [TABLE_LABELS[k] for k in keys], 'value': [getattr(self, k) for k in keys]})


def total_cost(breakdown: CostBreakdown, weights: CostWeights) -> float:
    """Weighted sum of the terms; the no-movement and abort penalties enter unweighted."""
    return math.fsum(list(breakdown.weighted_terms(weights).values()) + [breakdown.c_nm, breakdown.c_ab])


def _overshoot(position: np.ndarray, leg: np.ndarray, mission: Mission) -> float:
    targets = mission.points()
    dirs = targets - mission.leg_starts()
    lengths = np.linalg.norm(dirs, axis=1)
    total = 0.0
    for j in range(mission.n_waypoints):
        if lengths[j] <= 0.0:
            continue
        mask = (leg == j) | (leg == j + 1)
        if not np.any(mask):
            continue
        excess = (position[mask] - targets[j]) @ (dirs[j] / lengths[j])
        total += max(0.0, float(excess.max()))
    return total


def compute_terms(log: FlightLog,
                  mission: Mission,
                  weights: CostWeights,
                  aborted: Optional[str] = None) -> CostBreakdown:
    """Score a flight log. `aborted` is the early-abort reason of a rollout that was cut short.

    A no-movement abort is charged through the no-movement term; any other abort adds the
    abort penalty.
    """
    if len(log) == 0:
        raise ValueError('Cannot score an empty flight log.')
    if log.swl is None and weights.w_n > 0.0:
        raise ConfigurationError('The noise term is weighted but the log carries no SWL history.')
    completed = len(log.visits) >= mission.n_waypoints
    c_t = float(log.t[log.visits[-1]]) if completed else float(log.t[-1])
    final_gap = float(np.linalg.norm(log.position[-1] - mission.points()[-1]))
    c_d = final_gap**weights.gamma_d
    c_o = float(np.abs(np.diff(log.attitude[:, 0])).sum() + np.abs(np.diff(log.attitude[:, 1])).sum())
    c_to = float(np.abs(np.diff(log.thrust)).sum())
    c_c = 0.0 if completed else weights.p_c
    c_os = _overshoot(log.position, log.leg, mission)
    c_p = float(log.power.sum() * log.dt) if weights.energy_mode else float(log.power.sum())
    if log.swl is None:
        c_n = 0.0
    else:
        s = np.asarray(log.swl, dtype=float) / weights.noise_ref
        c_n = float(np.sum(np.abs(s)**weights.noise_order) + s.max())
    moved = float(np.linalg.norm(log.position - log.position[0], axis=1).max())
    c_nm = weights.p_nm if moved < weights.epsilon else 0.0
    c_ab = weights.p_abort if aborted is not None and aborted != ABORT_NO_MOVEMENT else 0.0
    breakdown = CostBreakdown(c_t=c_t,
                              c_d=c_d,
                              c_o=c_o,
                              c_to=c_to,
                              c_c=c_c,
                              c_os=c_os,
                              c_p=c_p,
                              c_n=c_n,
                              c_nm=c_nm,
                              c_ab=c_ab)
    breakdown.total = total_cost(breakdown, weights)
    return breakdown


def calibrate_weights(baseline: CostBreakdown,
                      weights: Optional[CostWeights] = None,
                      target: float = 30.0) -> CostWeights:
    """Scale each weight so its term equals `target` on the baseline; completion weight and penalties are kept."""
    weights = weights or CostWeights()
    if baseline.c_c > 0.0:
        logging.warning('Calibrating on a baseline that did not complete its mission.')
    update = dict()
    for name in CALIBRATED:
        value = baseline.term(name)
        if value > 0.0:
            update[f'w_{name}'] = target / value
        else:
            logging.warning(f'Cost term c_{name} is zero on the baseline; its weight is set to 0.')
            update[f'w_{name}'] = 0.0
    return weights.model_copy(update=update)


class AbortPolicy(BaseModel):
    enabled: bool = True
    divergence_radius: float = Field(50.0, gt=0.0)
    grace_period: float = Field(3.0, ge=0.0)
    first_waypoint_budget: float = Field(40.0, gt=0.0)


@dataclass
class FlightProgress:
    t: float
    position: np.ndarray
    leg: int
    max_displacement: float


def early_abort(progress: FlightProgress, mission: Mission, policy: AbortPolicy,
                epsilon: float = 0.05) -> Optional[str]:
    """Abort reason for the current step, or None to continue."""
    if not policy.enabled:
        return None
    leg = min(progress.leg, mission.n_waypoints - 1)
    start = mission.leg_starts()[leg]
    reach = float(np.linalg.norm(mission.points()[leg] - start)) + policy.divergence_radius
    if not np.all(np.isfinite(progress.position)) or np.linalg.norm(progress.position - start) > reach:
        return ABORT_DIVERGED
    if progress.t >= policy.grace_period and progress.max_displacement < epsilon:
        return ABORT_NO_MOVEMENT
    if progress.leg == 0 and progress.t > policy.first_waypoint_budget:
        return ABORT_FIRST_WAYPOINT
    return None


def breakdown_frame(breakdowns: List[CostBreakdown], index: Optional[List[str]] = None) -> pd.DataFrame:
    return pd.DataFrame([b.to_row() for b in breakdowns], index=index)
