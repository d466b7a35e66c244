"""Baseline against optimized gains on a mission neither was tuned on."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from quadtune.control.gains import GainVector
from quadtune.mission.simulator import MissionResult, Scenario, run_mission
from quadtune.utils import PathLike, write_csv, write_json

INDICATOR_LABELS = {
    'receiver_spl_db': 'Average receiver SPL (dB)',
    'source_swl_db': 'Average source SWL (dB)',
    'power_w': 'Average electrical power (W)',
}
# Indicators in dB are compared by difference, the rest by relative change.
DB_INDICATORS = ('receiver_spl_db', 'source_swl_db')


def percent_change(baseline: float, optimized: float) -> float:
    """(baseline - optimized) / baseline, in percent; positive means the optimized value is lower."""
    if baseline == optimized:
        return 0.0
    if baseline == 0.0:
        return float('nan')
    return 100.0 * (baseline - optimized) / baseline


@dataclass
class UnseenReport:
    costs: pd.DataFrame
    indicators: pd.DataFrame
    baseline: MissionResult
    optimized: MissionResult

    def save(self, out_dir: PathLike):
        out_dir = Path(out_dir)
        write_csv(out_dir / 'cost_decomposition.csv', self.costs)
        write_csv(out_dir / 'indicators.csv', self.indicators)
        write_json(out_dir / 'baseline_cost.json', self.baseline.breakdown)
        write_json(out_dir / 'optimized_cost.json', self.optimized.breakdown)
        logging.imp(f'Unseen-mission report written to {out_dir}.')


def _cost_table(baseline: MissionResult, optimized: MissionResult) -> pd.DataFrame:
    a = baseline.breakdown.to_frame()
    b = optimized.breakdown.to_frame()
    return pd.DataFrame({
        'term': a['term'],
        'baseline': a['value'],
        'optimized': b['value'],
        'change_pct': [percent_change(x, y) for x, y in zip(a['value'], b['value'])],
    })


def _indicator_table(baseline: MissionResult, optimized: MissionResult) -> pd.DataFrame:
    a = baseline.indicators()
    b = optimized.indicators()
    rows = list()
    for key, label in INDICATOR_LABELS.items():
        if key in DB_INDICATORS:
            change, unit = b[key] - a[key], 'dB'
        else:
            change, unit = percent_change(a[key], b[key]), '%'
        rows.append({'indicator': label, 'baseline': a[key], 'optimized': b[key], 'change': change, 'unit': unit})
    return pd.DataFrame(rows)


def report_unseen(baseline: GainVector,
                  optimized: GainVector,
                  scenario: Scenario,
                  out_dir: Optional[PathLike] = None) -> UnseenReport:
    if not scenario.acoustic_grid:
        scenario = scenario.model_copy(update={'acoustic_grid': True})
    results = [run_mission(scenario, gains) for gains in (baseline, optimized)]
    for name, result in zip(['baseline', 'optimized'], results):
        logging.info(f'{name}: J={result.J:.4f}, completed={result.completed}, aborted={result.aborted}.')
    report = UnseenReport(_cost_table(*results), _indicator_table(*results), *results)
    if not np.isfinite(report.costs['baseline']).all():
        logging.warning('The baseline cost decomposition has non-finite entries.')
    if out_dir is not None:
        report.save(out_dir)
    return report
