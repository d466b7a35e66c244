"""Command line entry point. Every task resolves a preset, writes a manifest and hands over to its manager."""
from __future__ import annotations

import logging
import sys
import time
from argparse import ArgumentParser, Namespace
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from quadtune.cfg import reg, resolve
from quadtune.errors import QuadtuneError
from quadtune.search.harness import METHODS
from quadtune.training.manager import MANAGERS, BaseManager
from quadtune.utils import setup_logging, show_config, write_json


def _common_parser() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    group = parser.add_argument_group('run')
    group.add_argument('--preset', choices=sorted(reg.keys()), help='Named preset; each task has its own default.')
    group.add_argument('--config', help='JSON document overriding preset attributes.')
    group.add_argument('--seed', type=int, help='Base seed of the scenario.')
    group.add_argument('--out', help='Output directory, runs/<timestamp> by default.')
    group.add_argument('--workers', type=int, help='Worker processes for candidate evaluation.')
    group.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'IMP', 'WARNING', 'ERROR'])

    group = parser.add_argument_group('overrides')
    group.add_argument('--turbulence', choices=['on', 'off'])
    group.add_argument('--budget-evals', dest='max_evals', type=int)
    group.add_argument('--budget-hours', dest='max_hours', type=float)
    group.add_argument('--warm-start', dest='warm_start', help='Gains JSON used as the warm start.')
    group.add_argument('--bounds', help='Bounds JSON of the search space.')
    group.add_argument('--mission', help='Mission JSON.')
    group.add_argument('--methods', nargs='+', choices=METHODS)
    group.add_argument('--seeds', nargs='+', type=int, help='Optimizer seeds of a campaign.')
    return parser


OVERRIDES = ('seed', 'workers', 'turbulence', 'max_evals', 'max_hours', 'warm_start', 'bounds', 'mission', 'methods',
             'seeds')


def build_parser() -> ArgumentParser:
    common = _common_parser()
    parser = ArgumentParser(prog='quadtune', description='Noise-aware PID tuning for a simulated quadrotor.')
    tasks = parser.add_subparsers(dest='task', required=True)
    groups: Dict[str, Any] = dict()
    for words, cls in MANAGERS.items():
        head, *rest = words
        if not rest:
            sub = tasks.add_parser(head, parents=[common], help=cls.__doc__)
        else:
            if head not in groups:
                groups[head] = tasks.add_parser(head).add_subparsers(dest='action', required=True)
            sub = groups[head].add_parser(rest[0], parents=[common], help=cls.__doc__)
        sub.set_defaults(manager_cls=cls)
        cls.add_arguments(sub)
    return parser


def default_out_dir() -> Path:
    return Path('runs') / time.strftime('%Y-%m-%d-%H-%M-%S')


def make_manager(args: Namespace) -> BaseManager:
    cls = args.manager_cls
    out_dir = Path(args.out) if args.out else default_out_dir()
    setup_logging(out_dir, args.log_level)
    overrides = {name: getattr(args, name) for name in OVERRIDES}
    if overrides['turbulence'] is not None:
        overrides['turbulence'] = overrides['turbulence'] == 'on'
    config = resolve(args.preset or cls.default_preset, args.config, **overrides)
    show_config(' '.join(cls.command), config)

    manifest = config.model_dump(mode='json')
    manifest['command'] = list(cls.command)
    write_json(out_dir / 'manifest.json', manifest)
    return cls(config, out_dir, args)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manager = make_manager(args)
        manager.run()
    except QuadtuneError as e:
        logging.error(f'{type(e).__name__}: {e}')
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
