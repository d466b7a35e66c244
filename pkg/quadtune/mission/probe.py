"""Closed-loop Ziegler-Nichols probing of each cascade loop on the simulator."""
from __future__ import annotations

import logging
from typing import Dict, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from quadtune.control.gains import REFERENCE_GAINS, GainVector, PidGains
from quadtune.control.tuning import UltimateGainResult, find_ultimate_gain, ziegler_nichols
from quadtune.mission.cost import ABORT_DIVERGED
from quadtune.mission.mission import Mission
from quadtune.mission.simulator import Scenario, run_mission

PROBE_ALTITUDE = 10.0
# Inner loops first, so outer probes fly on already tuned inner loops.
TUNING_ORDER = ('att', 'vel_z', 'vel_xy', 'alt', 'pos_xy')


class LoopStep(NamedTuple):
    override: Optional[str]
    size: float
    signal: str


LOOP_STEPS: Dict[str, LoopStep] = {
    'att': LoopStep('roll', 0.1, 'phi'),
    'vel_xy': LoopStep('vx', 1.0, 'vx'),
    'vel_z': LoopStep('vz', 0.5, 'vz'),
    'pos_xy': LoopStep(None, 1.0, 'x'),
    'alt': LoopStep(None, 1.0, 'z'),
}


def probe_scenario(scenario: Scenario, loop: str, duration: float = 20.0) -> Scenario:
    """Hover at the probe altitude with a step on `loop`; no turbulence, no aborts, no completion."""
    step = LOOP_STEPS[loop]
    start = (0.0, 0.0, PROBE_ALTITUDE)
    target = list(start)
    if loop == 'pos_xy':
        target[0] += step.size
    elif loop == 'alt':
        target[2] += step.size
    mission = Mission(name=f'probe-{loop}', start=start, waypoints=[tuple(target)], max_time=duration)
    return scenario.model_copy(
        update={
            'mission': mission,
            'turbulence': False,
            'acoustic_grid': False,
            'waypoint_jitter': 0.0,
            'complete_on_reach': False,
            'abort': scenario.abort.model_copy(update={'enabled': False}),
        })


def _signal(log, name: str) -> np.ndarray:
    return {
        'phi': log.attitude[:, 0],
        'vx': log.velocity[:, 0],
        'vz': log.velocity[:, 2],
        'x': log.position[:, 0],
        'z': log.position[:, 2],
    }[name]


def loop_response(scenario: Scenario, gains: GainVector, loop: str, kp: float, duration: float = 20.0) -> np.ndarray:
    """Sampled step response of `loop` under P-only gains `kp`; inf-terminated if the rollout diverged."""
    step = LOOP_STEPS[loop]
    probe = probe_scenario(scenario, loop, duration)
    trial = gains.replace(**{loop: PidGains(kp=kp)})
    overrides = {step.override: step.size} if step.override is not None else None

    def hold(t, state):
        return overrides

    result = run_mission(probe, trial, probe=hold)
    y = _signal(result.log, step.signal)
    if result.aborted == ABORT_DIVERGED:
        y = np.append(y, np.inf)
    return y


def default_kp_grid(center: float, low: float = 0.1, high: float = 50.0, factor: float = 1.04) -> np.ndarray:
    n = int(np.ceil(np.log(high / low) / np.log(factor))) + 1
    return center * low * factor**np.arange(n)


def _bracket(result: UltimateGainResult) -> Optional[Tuple[float, float]]:
    for (k0, r0), (k1, r1) in zip(result.trace, result.trace[1:]):
        if r0 < 1.0 <= r1:
            return k0, k1
    return None


def probe_loop(scenario: Scenario,
               loop: str,
               gains: GainVector = REFERENCE_GAINS,
               kp_grid: Optional[Sequence[float]] = None,
               duration: float = 20.0,
               refine: int = 11) -> UltimateGainResult:
    """Search the ultimate gain of one loop; a skipped band is refined between the bracketing grid points."""
    if loop not in LOOP_STEPS:
        raise KeyError(f'Unknown loop {loop}.')
    if kp_grid is None:
        kp_grid = default_kp_grid(getattr(REFERENCE_GAINS, loop).kp)

    def response(kp: float) -> np.ndarray:
        return loop_response(scenario, gains, loop, kp, duration)

    result = find_ultimate_gain(response, kp_grid, scenario.dt)
    if result.exhausted and refine > 0:
        bracket = _bracket(result)
        if bracket is not None:
            fine = find_ultimate_gain(response, np.linspace(*bracket, refine + 2)[1:-1], scenario.dt)
            fine.trace = result.trace + fine.trace
            result = fine
    logging.info(f'Probe {loop}: Ku={result.ku}, Tu={result.tu}, {len(result.trace)} responses.')
    return result


def tune_baseline(scenario: Scenario,
                  gains: GainVector = REFERENCE_GAINS,
                  duration: float = 20.0,
                  order: Sequence[str] = TUNING_ORDER) -> Tuple[GainVector, Dict[str, UltimateGainResult]]:
    """Ziegler-Nichols gains for every loop; loops whose search is exhausted keep their current gains."""
    results = dict()
    for loop in order:
        result = probe_loop(scenario, loop, gains, duration=duration)
        results[loop] = result
        if result.exhausted:
            logging.warning(f'No sustained oscillation found for {loop}; keeping {getattr(gains, loop)}.')
            continue
        gains = gains.replace(**{loop: ziegler_nichols(result.ku, result.tu)})
    logging.imp(f'Baseline gains: {gains.to_array().round(4).tolist()}')
    return gains, results
