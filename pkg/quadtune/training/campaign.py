"""Method x seed campaigns over one scenario, with per-run convergence files and a summary."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from quadtune.control.gains import PARAM_NAMES, GainVector
from quadtune.mission.cost import calibrate_weights
from quadtune.mission.simulator import Scenario, run_mission
from quadtune.search.harness import METHODS, MissionObjective, OptimizerResult, evaluate, run_optimizer
from quadtune.search.space import Budget, EvalRecord, OptimizerConfig, SearchSpace
from quadtune.utils import PathLike, write_csv, write_json

SUMMARY_COLUMNS = ('method', 'seed', 'status', 'best_J', 'mean_J', 'n_evals')
TIMING_SUMMARY_COLUMNS = ('method', 'seed', 'wall_seconds', 'seconds_per_eval', 'overhead')
WARM_START = 'warm_start'


class CampaignSpec(BaseModel):
    methods: List[str] = Field(min_length=1)
    space: SearchSpace
    budget: Budget
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    # Rescale the cost weights so every term is 30 on the warm start.
    calibrate: bool = True
    calibration_target: float = Field(30.0, gt=0.0)
    workers: int = Field(1, ge=1)

    @field_validator('methods')
    @classmethod
    def _known(cls, methods: List[str]) -> List[str]:
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise ValueError(f'Unknown methods {unknown}; expected a subset of {METHODS}.')
        return methods


@dataclass
class CampaignReport:
    summary: pd.DataFrame
    timing: pd.DataFrame
    scenario: Scenario
    warm_start: Optional[EvalRecord] = None

    def best(self, method: str) -> Optional[float]:
        rows = self.summary[(self.summary['method'] == method) & (self.summary['status'] == 'ok')]
        return None if rows.empty else float(rows['best_J'].min())


def calibrate_scenario(scenario: Scenario, gains: GainVector, target: float = 30.0) -> Tuple[Scenario, EvalRecord]:
    """Scenario whose weights are calibrated on `gains`, and the record of `gains` under the new weights."""
    baseline = run_mission(scenario, gains)
    weights = calibrate_weights(baseline.breakdown, scenario.weights, target)
    scenario = scenario.model_copy(update={'weights': weights})
    return scenario, evaluate(gains, scenario)


def bare_rollout_seconds(scenario: Scenario, gains: GainVector, repeats: int = 3) -> float:
    start = time.perf_counter()
    for _ in range(repeats):
        run_mission(scenario, gains)
    return (time.perf_counter() - start) / repeats


def _write_run(out_dir: Path, result: OptimizerResult):
    write_csv(out_dir / 'convergence.csv', result.history())
    write_csv(out_dir / 'timing.csv', result.timing())
    write_json(out_dir / 'best.json', result.best)
    if len(result.best.gains) == len(PARAM_NAMES):
        result.best.gain_vector().save(out_dir / 'best_gains.json')


def _aggregate(rows: pd.DataFrame) -> pd.DataFrame:
    ok = rows[rows['status'] == 'ok']
    out = list()
    for method, group in ok.groupby('method', sort=False):
        if len(group) < 2:
            continue
        out.append({
            'method': method,
            'seed': 'all',
            'status': 'ok',
            'best_J': group['best_J'].min(),
            'mean_J': group['best_J'].mean(),
            'n_evals': int(group['n_evals'].sum()),
        })
    return pd.DataFrame(out, columns=list(SUMMARY_COLUMNS))


def run_campaign(spec: CampaignSpec, scenario: Scenario, out_dir: Optional[PathLike] = None) -> CampaignReport:
    """Run every method with every seed. A failing run becomes a `failed` row and the campaign goes on."""
    out_dir = None if out_dir is None else Path(out_dir)
    rows = list()
    timing = list()
    warm = None
    rollout_seconds = float('nan')
    if spec.space.warm_start is not None:
        gains = GainVector.from_array(spec.space.warm_start)
        if spec.calibrate:
            scenario, warm = calibrate_scenario(scenario, gains, spec.calibration_target)
            logging.imp(f'Calibrated weights on the warm start; J={warm.J:.4f}.')
        else:
            warm = evaluate(gains, scenario)
        rows.append({
            'method': WARM_START,
            'seed': scenario.seed,
            'status': 'ok',
            'best_J': warm.J,
            'mean_J': warm.J,
            'n_evals': 1
        })
        rollout_seconds = bare_rollout_seconds(scenario, gains)
        if out_dir is not None:
            write_json(out_dir / WARM_START / 'record.json', warm)

    objective = MissionObjective(scenario)
    for method in spec.methods:
        for seed in spec.seeds:
            config = spec.optimizer.model_copy(update={'seed': seed})
            try:
                result = run_optimizer(method, spec.space, spec.budget, objective, config, workers=spec.workers)
            except Exception as e:
                logging.warning(f'{method} with seed {seed} failed: {e!r}')
                rows.append({'method': method, 'seed': seed, 'status': 'failed'})
                continue
            J = np.array([r.J for r in result.records])
            rows.append({
                'method': method,
                'seed': seed,
                'status': 'ok',
                'best_J': result.best.J,
                'mean_J': float(J.mean()),
                'n_evals': result.n_evals
            })
            timing.append({
                'method': method,
                'seed': seed,
                'wall_seconds': result.wall_time,
                'seconds_per_eval': result.wall_time / result.n_evals,
                'overhead': result.wall_time / result.n_evals / rollout_seconds,
            })
            if out_dir is not None:
                _write_run(out_dir / method / f'seed_{seed}', result)
            logging.imp(f'{method} seed {seed}: best J={result.best.J:.4f} after {result.n_evals} evaluations.')

    summary = pd.DataFrame(rows, columns=list(SUMMARY_COLUMNS))
    summary = pd.concat([summary, _aggregate(summary)], ignore_index=True)
    timing = pd.DataFrame(timing, columns=list(TIMING_SUMMARY_COLUMNS))
    if out_dir is not None:
        write_csv(out_dir / 'summary.csv', summary)
        write_csv(out_dir / 'timing_summary.csv', timing)
        logging.imp(f'Campaign summary written to {out_dir / "summary.csv"}.')
    return CampaignReport(summary=summary, timing=timing, scenario=scenario, warm_start=warm)
