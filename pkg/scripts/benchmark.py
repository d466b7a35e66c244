"""Optimizer checks on the 15-dimensional sphere, and the cost of one mission rollout.

    python scripts/benchmark.py sphere --evals 6000
    python scripts/benchmark.py rollout --repeats 5
"""
import argparse
import timeit

import pandas as pd

from quadtune.control.gains import REFERENCE_GAINS
from quadtune.mission.mission import Mission
from quadtune.mission.simulator import Scenario, prepare_plant, run_mission
from quadtune.search.harness import METHODS, SphereObjective, run_optimizer
from quadtune.search.space import Budget, OptimizerConfig, SearchSpace
from quadtune.utils import setup_logging

# Best J each method should reach on the sphere. BO runs a shorter budget; random search rarely meets its target.
TARGETS = {'ga': 1e-2, 'pso': 1e-2, 'gwo': 1e-2, 'bo': 1e-2, 'random': 1.0}


def sphere(evals: int, dim: int, seeds: int, methods) -> pd.DataFrame:
    space = SearchSpace.sphere(dim, half_width=5.0)
    rows = list()
    for method in methods:
        for seed in range(seeds):
            budget = Budget(max_evals=evals if method != 'bo' else min(evals, 300))
            result = run_optimizer(method, space, budget, SphereObjective(), OptimizerConfig(seed=seed))
            target = TARGETS[method]
            rows.append({
                'method': method,
                'seed': seed,
                'n_evals': result.n_evals,
                'best_J': result.best.J,
                'target': target,
                'passed': result.best.J <= target,
                'wall_seconds': result.wall_time,
            })
    return pd.DataFrame(rows)


def rollout(repeats: int) -> pd.DataFrame:
    mission = Mission(start=(0.0, 0.0, 10.0), waypoints=[(10.0, 0.0, 10.0), (10.0, 10.0, 15.0)], max_time=30.0)
    rows = list()
    for turbulence in [False, True]:
        for acoustic_grid in [False, True]:
            scenario = Scenario(mission=mission, turbulence=turbulence, acoustic_grid=acoustic_grid)
            prepare_plant(scenario)
            seconds = timeit.timeit(lambda: run_mission(scenario, REFERENCE_GAINS), number=repeats) / repeats
            rows.append({'turbulence': turbulence, 'acoustic_grid': acoustic_grid, 'seconds': seconds})
    return pd.DataFrame(rows)


if __name__ == '__main__':
    parser = argparse.ArgumentParser()
    sub = parser.add_subparsers(dest='what', required=True)
    p = sub.add_parser('sphere')
    p.add_argument('--evals', type=int, default=6000)
    p.add_argument('--dim', type=int, default=15)
    p.add_argument('--seeds', type=int, default=1)
    p.add_argument('--methods', nargs='+', default=list(METHODS), choices=METHODS)
    p = sub.add_parser('rollout')
    p.add_argument('--repeats', type=int, default=3)
    args = parser.parse_args()

    setup_logging(level='WARNING')
    if args.what == 'sphere':
        table = sphere(args.evals, args.dim, args.seeds, args.methods)
    else:
        table = rollout(args.repeats)
    print(table.to_string(index=False))
