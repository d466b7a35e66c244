"""Budgeted evaluation harness shared by every optimizer."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Type

import numpy as np
import pandas as pd

from quadtune.control.gains import GainVector
from quadtune.errors import BudgetExhausted, ConfigurationError
from quadtune.mission.cost import ABORT_DIVERGED
from quadtune.mission.simulator import Scenario, run_mission
from quadtune.search.bayes import BoSearcher
from quadtune.search.searcher import BaseSearcher, GaSearcher, GwoSearcher, PsoSearcher, RandomSearcher
from quadtune.search.space import Budget, EvalRecord, OptimizerConfig, SearchSpace
from quadtune.utils import derive_int, make_rng, progress

SEARCHERS: Dict[str, Type[BaseSearcher]] = {
    cls.name: cls
    for cls in [GaSearcher, PsoSearcher, GwoSearcher, BoSearcher, RandomSearcher]
}
METHODS = tuple(SEARCHERS)

HISTORY_COLUMNS = ('eval_index', 'candidate_J', 'incumbent_J', 'seed', 'aborted')
TIMING_COLUMNS = ('eval_index', 'wall_seconds', 'eval_seconds')


def evaluate(gains: GainVector, scenario: Scenario, seed: Optional[int] = None) -> EvalRecord:
    """Fly one candidate. Flight failures come back as penalty costs, never as exceptions."""
    seed = scenario.seed if seed is None else seed
    result = run_mission(scenario, gains, seed=seed)
    J = result.J
    reason = result.aborted
    if not np.isfinite(J):
        J = scenario.weights.p_c + scenario.weights.p_abort
        reason = reason or ABORT_DIVERGED
    return EvalRecord(gains=gains.to_array().tolist(),
                      J=J,
                      breakdown=result.breakdown,
                      wall_time=result.wall_time,
                      seed=seed,
                      aborted=reason is not None,
                      abort_reason=reason)


class MissionObjective:

    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    def __call__(self, x: np.ndarray, seed: int) -> EvalRecord:
        return evaluate(GainVector.from_array(x), self.scenario, seed)


class SphereObjective:
    """f(x) = |x - center|^2, for checking the optimizers."""

    def __init__(self, center: Optional[np.ndarray] = None):
        self.center = None if center is None else np.asarray(center, dtype=float)

    def __call__(self, x: np.ndarray, seed: int) -> EvalRecord:
        start = time.perf_counter()
        x = np.asarray(x, dtype=float)
        diff = x if self.center is None else x - self.center
        J = float(diff @ diff)
        return EvalRecord(gains=x.tolist(), J=J, wall_time=time.perf_counter() - start, seed=seed)


Objective = Callable[[np.ndarray, int], EvalRecord]


@dataclass
class OptimizerResult:
    method: str
    best: EvalRecord
    records: List[EvalRecord]
    # Seconds since the run started, at the completion of each evaluation.
    finished_at: List[float]

    @property
    def n_evals(self) -> int:
        return len(self.records)

    @property
    def wall_time(self) -> float:
        return self.finished_at[-1]

    def history(self) -> pd.DataFrame:
        J = np.array([r.J for r in self.records])
        return pd.DataFrame({
            'eval_index': np.arange(len(J)),
            'candidate_J': J,
            'incumbent_J': np.minimum.accumulate(J),
            'seed': [r.seed for r in self.records],
            'aborted': [r.abort_reason or '' for r in self.records],
        })

    def timing(self) -> pd.DataFrame:
        return pd.DataFrame({
            'eval_index': np.arange(len(self.records)),
            'wall_seconds': self.finished_at,
            'eval_seconds': [r.wall_time for r in self.records],
        })


def make_searcher(method: str, space: SearchSpace, config: OptimizerConfig, budget: Budget) -> BaseSearcher:
    if method not in SEARCHERS:
        raise ConfigurationError(f'Unknown method {method!r}; expected one of {METHODS}.')
    rng = make_rng(config.seed, 'search', method)
    if method == 'gwo':
        max_iters = 100
        if budget.max_evals is not None:
            max_iters = max(1, budget.max_evals // config.gwo.pack - 1)
        return GwoSearcher(space, config, rng, max_iters=max_iters)
    return SEARCHERS[method](space, config, rng)


def run_optimizer(method: str,
                  space: SearchSpace,
                  budget: Budget,
                  objective: Objective,
                  config: Optional[OptimizerConfig] = None,
                  workers: int = 1,
                  clock: Callable[[], float] = time.perf_counter) -> OptimizerResult:
    """Ask/tell loop under the budget.

    The clock is read between evaluations only. With `workers > 1` each batch is evaluated
    in a process pool and the clock is read between batches.
    """
    config = config or OptimizerConfig()
    searcher = make_searcher(method, space, config, budget)
    records: List[EvalRecord] = list()
    finished_at: List[float] = list()
    start = clock()

    def time_left() -> bool:
        return budget.max_seconds is None or clock() - start < budget.max_seconds

    def evals_left() -> int:
        return np.iinfo(np.int64).max if budget.max_evals is None else budget.max_evals - len(records)

    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    bar = progress(f'{method}', total=budget.max_evals)
    incumbent = np.inf
    batch_index = 0
    try:
        while evals_left() > 0 and time_left():
            candidates = searcher.ask()
            candidates = candidates[:evals_left()]
            seeds = [derive_int(config.seed, 'eval', batch_index, i) for i in range(len(candidates))]
            batch: List[EvalRecord] = list()
            if executor is None:
                for x, seed in zip(candidates, seeds):
                    if batch and not time_left():
                        break
                    batch.append(objective(x, seed))
                    finished_at.append(clock() - start)
            else:
                batch = list(executor.map(objective, candidates, seeds))
                finished_at.extend([clock() - start] * len(batch))
            records.extend(batch)
            bar.update(len(batch))
            costs = np.array([r.J for r in batch])
            logging.debug(f'{method} batch {batch_index}: {len(batch)} evaluations, best {costs.min():.6g}.')
            if costs.min() < incumbent:
                incumbent = float(costs.min())
                logging.imp(f'{method}: new incumbent J={incumbent:.6g} after {len(records)} evaluations.')
            if len(batch) < len(candidates):
                break
            searcher.tell(candidates, costs)
            batch_index += 1
    finally:
        bar.close()
        if executor is not None:
            executor.shutdown()

    if not records:
        raise BudgetExhausted(f'The budget {budget.model_dump()} allowed no evaluation for {method}.')
    best = min(records, key=lambda r: r.J)
    return OptimizerResult(method=method, best=best, records=records, finished_at=finished_at)
