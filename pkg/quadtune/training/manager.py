import logging
from abc import ABC, abstractmethod
from argparse import ArgumentParser, Namespace
from pathlib import Path
from typing import ClassVar, Dict, Tuple, Type

import numpy as np
import pandas as pd

from quadtune.aero.surrogate import SurrogateTable, build_surrogate, validate_surrogate
from quadtune.cfg import RunConfig, config_file
from quadtune.control.gains import GainVector
from quadtune.mission.probe import tune_baseline
from quadtune.mission.simulator import run_mission
from quadtune.search.harness import METHODS
from quadtune.training.campaign import run_campaign
from quadtune.training.report import report_unseen
from quadtune.utils import make_rng, write_csv, write_json

MANAGERS: Dict[Tuple[str, ...], Type['BaseManager']] = dict()


def command(*words: str):

    def wrapper(cls):
        cls.command = words
        MANAGERS[words] = cls
        return cls

    return wrapper


class BaseManager(ABC):

    command: ClassVar[Tuple[str, ...]]
    default_preset: ClassVar[str] = 'test_case1'

    def __init__(self, config: RunConfig, out_dir: Path, args: Namespace):
        self.config = config
        self.scenario = config.scenario
        self.out_dir = Path(out_dir)
        self.args = args

    @classmethod
    def add_arguments(cls, parser: ArgumentParser):
        pass

    @abstractmethod
    def run(self):
        ...


@command('aero', 'table')
class AeroTableManager(BaseManager):
    """Build the rotor performance table."""

    def run(self):
        scn = self.scenario
        table = build_surrogate(scn.rotor, *scn.aero.grids(), rho=scn.rho, workers=scn.aero.workers)
        table.save(self.out_dir / 'aero_table.json')
        logging.imp(f'Rotor table written to {self.out_dir / "aero_table.json"}.')


@command('aero', 'validate')
class AeroValidateManager(BaseManager):
    """Compare table lookups against the blade-element solver."""

    @classmethod
    def add_arguments(cls, parser: ArgumentParser):
        parser.add_argument('--table', help='Rotor table JSON; built from the scenario settings if omitted.')
        parser.add_argument('--n', type=int, default=1000, help='Number of random query points.')

    def run(self):
        scn = self.scenario
        if self.args.table:
            table = SurrogateTable.load(self.args.table)
        else:
            table = build_surrogate(scn.rotor, *scn.aero.grids(), rho=scn.rho, workers=scn.aero.workers)
        rng = make_rng(scn.seed, 'aero', 'validate')
        report = validate_surrogate(table, scn.rotor, n=self.args.n, rho=scn.rho, rng=rng)
        write_csv(self.out_dir / 'aero_validation.csv', report.errors)
        logging.info('Surrogate errors:\n' + report.errors.to_string(index=False))
        logging.imp(f'Table lookups are {report.speedup:.1f}x faster than solver calls.')


@command('tune', 'zn')
class ZnManager(BaseManager):
    """Ziegler-Nichols baseline gains from closed-loop probing."""

    @classmethod
    def add_arguments(cls, parser: ArgumentParser):
        parser.add_argument('--duration', type=float, default=20.0, help='Length of each probe flight (s).')

    def run(self):
        gains, results = tune_baseline(self.scenario, duration=self.args.duration)
        gains.save(self.out_dir / 'zn_gains.json')
        rows = list()
        traces = list()
        for loop, result in results.items():
            rows.append({'loop': loop, 'ku': result.ku, 'tu': result.tu, 'exhausted': result.exhausted})
            trace = result.trace_frame()
            trace.insert(0, 'loop', loop)
            traces.append(trace)
        write_csv(self.out_dir / 'zn_summary.csv', pd.DataFrame(rows))
        write_csv(self.out_dir / 'zn_trace.csv', pd.concat(traces, ignore_index=True))


@command('tune', 'run')
class TuneManager(BaseManager):
    """One optimizer, one seed."""

    @classmethod
    def add_arguments(cls, parser: ArgumentParser):
        parser.add_argument('--method', required=True, choices=METHODS)

    def run(self):
        seed = self.config.attributes['seed']
        spec = self.config.campaign.model_copy(update={'methods': [self.args.method], 'seeds': [seed]})
        report = run_campaign(spec, self.scenario, self.out_dir)
        logging.info(f'Summary:\n{report.summary.to_string(index=False)}')


@command('campaign')
class CampaignManager(BaseManager):
    """Every method with every seed."""

    def run(self):
        report = run_campaign(self.config.campaign, self.scenario, self.out_dir)
        logging.info(f'Summary:\n{report.summary.to_string(index=False)}')


@command('simulate')
class SimulateManager(BaseManager):
    """Fly one mission and export the trajectory, ground grid and cost."""

    @classmethod
    def add_arguments(cls, parser: ArgumentParser):
        parser.add_argument('--gains', default='baseline_gains.json', help='Gains JSON to fly.')

    def run(self):
        gains = GainVector.load(config_file(self.args.gains))
        scenario = self.scenario.model_copy(update={'acoustic_grid': True})
        result = run_mission(scenario, gains)
        write_csv(self.out_dir / 'trajectory.csv', result.log.to_frame())
        write_csv(self.out_dir / 'grid_spl.csv', result.grid.to_frame())
        write_json(self.out_dir / 'grid_summary.json', result.grid.summary())
        cost = {
            'breakdown': result.breakdown.model_dump(),
            'completed': result.completed,
            'aborted': result.aborted,
            'indicators': {k: float(np.round(v, 10)) for k, v in result.indicators().items()},
            'stats': result.stats,
        }
        write_json(self.out_dir / 'cost.json', cost)
        logging.imp(f'J={result.J:.4f}, completed={result.completed}, aborted={result.aborted}.')


@command('report', 'unseen')
class ReportManager(BaseManager):
    """Baseline against optimized gains on the unseen mission."""

    default_preset = 'unseen'

    @classmethod
    def add_arguments(cls, parser: ArgumentParser):
        parser.add_argument('--baseline', default='baseline_gains.json', help='Gains JSON of the baseline.')
        parser.add_argument('--optimized', required=True, help='Gains JSON of the optimized controller.')

    def run(self):
        baseline = GainVector.load(config_file(self.args.baseline))
        optimized = GainVector.load(config_file(self.args.optimized))
        report = report_unseen(baseline, optimized, self.scenario, self.out_dir)
        logging.info('Cost decomposition:\n' + report.costs.to_string(index=False))
        logging.info('Indicators:\n' + report.indicators.to_string(index=False))
