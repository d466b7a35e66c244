"""Ziegler-Nichols baseline: ultimate-gain search on a closed-loop response and the classic PID recipe."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.signal import find_peaks

from quadtune.control.gains import PidGains
from quadtune.errors import DomainError

RATIO_BAND = (0.95, 1.05)
MIN_RATIOS = 3


def ziegler_nichols(ku: float, tu: float) -> PidGains:
    if ku <= 0.0 or tu <= 0.0:
        raise DomainError(f'Ku and Tu must be positive, got {ku}, {tu}.')
    kp = 0.6 * ku
    return PidGains(kp=kp, ki=kp / (tu / 2.0), kd=kp * tu / 8.0)


@dataclass
class Oscillation:
    ratio: float
    period: Optional[float]


def measure_oscillation(y: np.ndarray, dt: float, rel_prominence: float = 1e-3) -> Oscillation:
    """Amplitude ratio between swings one period apart, and the mean peak spacing.

    The ratio is 0 when fewer than `MIN_RATIOS` comparable swings exist and inf for a
    non-finite response.
    """
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        return Oscillation(np.inf, None)
    span = float(np.ptp(y))
    if span == 0.0:
        return Oscillation(0.0, None)
    prominence = rel_prominence * span
    maxima, _ = find_peaks(y, prominence=prominence)
    minima, _ = find_peaks(-y, prominence=prominence)
    extrema = np.sort(np.concatenate([maxima, minima]))
    swings = np.abs(np.diff(y[extrema]))
    if swings.size < MIN_RATIOS + 2:
        return Oscillation(0.0, None)
    ratio = float(np.median(swings[2:] / swings[:-2]))
    period = float(np.mean(np.diff(maxima)) * dt) if maxima.size >= 2 else None
    return Oscillation(ratio, period)


@dataclass
class UltimateGainResult:
    ku: Optional[float]
    tu: Optional[float]
    exhausted: bool
    trace: List[Tuple[float, float]] = field(default_factory=list)

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.trace, columns=['kp', 'ratio'])


def find_ultimate_gain(response_fn: Callable[[float], np.ndarray],
                       kp_grid: Sequence[float],
                       dt: float,
                       band: Tuple[float, float] = RATIO_BAND) -> UltimateGainResult:
    """Smallest grid Kp whose P-only step response neither grows nor decays.

    `response_fn(kp)` returns the sampled closed-loop response of the probed loop.
    """
    trace = list()
    for kp in sorted(kp_grid):
        osc = measure_oscillation(response_fn(kp), dt)
        trace.append((float(kp), osc.ratio))
        logging.debug(f'kp={kp:.4f} amplitude ratio={osc.ratio:.4f}')
        if band[0] <= osc.ratio <= band[1] and osc.period is not None:
            return UltimateGainResult(float(kp), osc.period, False, trace)
    return UltimateGainResult(None, None, True, trace)
