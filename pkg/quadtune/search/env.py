"""Gain tuning as a one-step bandit environment."""
from __future__ import annotations

from typing import Any, Dict, Optional, Sequence, Tuple

import gymnasium as gym
import numpy as np
from gymnasium import spaces

from quadtune.mission.mission import mission_summary
from quadtune.mission.simulator import Scenario
from quadtune.search.harness import MissionObjective, Objective
from quadtune.search.space import SearchSpace

CONTEXT_MODES = ('fixed', 'random')
SEED_RANGE = 2**31


def scenario_context(scenario: Scenario) -> np.ndarray:
    summary = mission_summary(scenario.mission)
    return np.array([
        summary['n_waypoints'], summary['path_length'], summary['max_altitude'], summary['max_climb'],
        float(scenario.turbulence)
    ])


def one_step_env(action: np.ndarray, objective: Objective, space: SearchSpace, seed: int) -> Tuple[float, bool]:
    """Reward of a single pull, -J at the action clipped into the box, and whether it was clipped."""
    action = np.asarray(action, dtype=float)
    return -objective(space.clip(action), seed).J, not space.contains(action)


class GainTuningEnv(gym.Env):
    """Every episode is one step: the action is a gain vector, the reward is -J.

    In `fixed` mode every step is scored with the same evaluation seed and the observation is
    the nominal context. In `random` mode `reset` draws a new evaluation seed, which also
    enters the observation as its last entry scaled to [0, 1).
    """

    metadata: Dict[str, Any] = {'render_modes': []}

    def __init__(self,
                 objective: Objective,
                 space: SearchSpace,
                 context: Optional[Sequence[float]] = None,
                 context_mode: str = 'fixed',
                 seed: int = 0):
        if context_mode not in CONTEXT_MODES:
            raise ValueError(f'Unknown context mode {context_mode!r}; expected one of {CONTEXT_MODES}.')
        self.objective = objective
        self.space = space
        self.context = np.asarray([] if context is None else context, dtype=float)
        self.context_mode = context_mode
        self.eval_seed = seed
        lo, hi = space.arrays()
        self.action_space = spaces.Box(low=lo, high=hi, dtype=np.float64)
        self.observation_space = spaces.Box(low=-np.inf, high=np.inf, shape=(self.context.size + 1, ), dtype=np.float64)

    @classmethod
    def for_scenario(cls, scenario: Scenario, space: SearchSpace, context_mode: str = 'fixed') -> GainTuningEnv:
        return cls(MissionObjective(scenario), space, scenario_context(scenario), context_mode, scenario.seed)

    def _observation(self) -> np.ndarray:
        u = self.eval_seed / SEED_RANGE if self.context_mode == 'random' else 0.0
        return np.append(self.context, u)

    def reset(self, *, seed: Optional[int] = None, options: Optional[dict] = None) -> Tuple[np.ndarray, dict]:
        super().reset(seed=seed)
        if self.context_mode == 'random':
            self.eval_seed = int(self.np_random.integers(SEED_RANGE))
        return self._observation(), {'seed': self.eval_seed}

    def step(self, action) -> Tuple[np.ndarray, float, bool, bool, dict]:
        action = np.asarray(action, dtype=float)
        clipped = not self.space.contains(action)
        record = self.objective(self.space.clip(action), self.eval_seed)
        record = record.model_copy(update={'clipped': clipped})
        return self._observation(), -record.J, True, False, {'record': record, 'clipped': clipped}
