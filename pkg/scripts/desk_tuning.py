"""Bounded-space tuning campaign at desk scale, five seeds per method.

    python scripts/desk_tuning.py --out runs/desk --workers 8

Checks that the median best J of GA, PSO and GWO is no worse than the warm start, and that GWO is no worse
than random search.
"""
import argparse
import sys

from quadtune.cfg import resolve
from quadtune.training.campaign import WARM_START, run_campaign
from quadtune.utils import setup_logging

METHODS = ('ga', 'pso', 'gwo', 'random')


def check(summary):
    ok = summary[(summary['status'] == 'ok') & (summary['seed'] != 'all')]
    warm = float(ok[ok['method'] == WARM_START]['best_J'].iloc[0])
    medians = ok[ok['method'] != WARM_START].groupby('method')['best_J'].median()
    failures = list()
    for m in ['ga', 'pso', 'gwo']:
        if medians[m] > warm:
            failures.append(f'{m} median {medians[m]:.4f} > warm start {warm:.4f}')
    if medians['gwo'] > medians['random']:
        failures.append(f'gwo median {medians["gwo"]:.4f} > random median {medians["random"]:.4f}')
    return warm, medians, failures


if __name__ == '__main__':
    parser = argparse.ArgumentParser()
    parser.add_argument('--out', default='runs/desk_tuning')
    parser.add_argument('--preset', default='test_case2')
    parser.add_argument('--warm-start', default='baseline_gains.json')
    parser.add_argument('--evals', type=int, default=500)
    parser.add_argument('--seeds', type=int, default=5)
    parser.add_argument('--workers', type=int, default=1)
    args = parser.parse_args()

    setup_logging(args.out)
    config = resolve(args.preset,
                     methods=METHODS,
                     seeds=tuple(range(args.seeds)),
                     max_evals=args.evals,
                     warm_start=args.warm_start,
                     workers=args.workers)
    report = run_campaign(config.campaign, config.scenario, args.out)
    warm, medians, failures = check(report.summary)
    print(f'warm start J: {warm:.4f}')
    print(medians.to_string())
    for failure in failures:
        print(f'FAILED: {failure}')
    sys.exit(1 if failures else 0)
