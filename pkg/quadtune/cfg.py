"""Named presets and configuration resolution.

Precedence: preset attributes, then the `--config` JSON document, then explicit CLI flags.
A config document may set any preset attribute at the top level, plus `scenario` and
`optimizer` objects that are merged into the Scenario and OptimizerConfig fields.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Type

import inflection
from pydantic import BaseModel

from quadtune.control.gains import GainVector, SearchBounds
from quadtune.errors import ConfigurationError
from quadtune.mission.mission import Mission
from quadtune.mission.simulator import Scenario
from quadtune.search.harness import METHODS
from quadtune.search.space import Budget, SearchSpace
from quadtune.training.campaign import CampaignSpec
from quadtune.utils import PathLike, read_json

CONFIG_DIR = Path(__file__).parent / 'configs'


class Registry:

    def __init__(self, name: str):
        self.name = name
        self._presets: Dict[str, Type] = dict()

    def __call__(self, cls: Type) -> Type:
        cls = dataclass(cls)
        key = inflection.underscore(cls.__name__)
        if key in self._presets:
            raise ConfigurationError(f'Duplicate preset {key!r} in registry {self.name!r}.')
        self._presets[key] = cls
        return cls

    def __getitem__(self, key: str) -> Type:
        try:
            return self._presets[key]
        except KeyError:
            raise ConfigurationError(f'Unknown preset {key!r}; expected one of {sorted(self._presets)}.') from None

    def __contains__(self, key: str) -> bool:
        return key in self._presets

    def keys(self):
        return self._presets.keys()


reg = Registry('cfg')


@dataclass
class SharedConfig:
    mission: str = 'mission_train.json'
    warm_start: Optional[str] = 'baseline_gains.json'
    bounds: str = 'bounds_wide.json'
    # Loops whose gains stay at the warm start.
    frozen: Tuple[str, ...] = ()
    turbulence: bool = False
    acoustic_grid: bool = False
    waypoint_jitter: float = 0.0
    dt: float = 0.008
    methods: Tuple[str, ...] = METHODS
    seeds: Tuple[int, ...] = (0, )
    max_evals: Optional[int] = 500
    max_hours: Optional[float] = 0.5
    calibrate: bool = True
    seed: int = 0
    workers: int = 1


@reg
class TestCase1(SharedConfig):
    """Wide bounds, calm air."""


@reg
class TestCase2(TestCase1):
    bounds: str = 'bounds_bounded.json'


@reg
class TestCase3(TestCase2):
    turbulence: bool = True


@reg
class TestCase3Fixed(TestCase3):
    frozen: Tuple[str, ...] = ('att', )


@reg
class FullScale(TestCase2):
    max_evals: Optional[int] = 6000
    max_hours: Optional[float] = 14.0


@reg
class Unseen(TestCase1):
    mission: str = 'mission_unseen.json'
    acoustic_grid: bool = True


@reg
class Smoke(TestCase2):
    mission: str = 'mission_smoke.json'
    methods: Tuple[str, ...] = ('random', )
    max_evals: Optional[int] = 10
    max_hours: Optional[float] = None
    calibrate: bool = False


def config_file(name: PathLike) -> Path:
    """A path as given, or else a file shipped in the package configs."""
    path = Path(name)
    if path.exists():
        return path
    shipped = CONFIG_DIR / path.name
    if shipped.exists():
        return shipped
    raise ConfigurationError(f'No such config file: {name}.')


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


class RunConfig(BaseModel):
    """Everything a task needs, fully resolved. This is what `manifest.json` holds."""

    preset: str
    scenario: Scenario
    campaign: CampaignSpec
    attributes: Dict[str, Any]


def resolve(preset: str = 'test_case1', document: Optional[PathLike] = None, **overrides) -> RunConfig:
    """Build the scenario and campaign for `preset`, a config document and CLI overrides (None is ignored)."""
    attrs = asdict(reg[preset]())
    names = {f.name for f in fields(SharedConfig)}
    extra: Dict[str, Any] = {'scenario': dict(), 'optimizer': dict()}
    if document is not None:
        doc = read_json(document)
        unknown = set(doc) - names - set(extra)
        if unknown:
            raise ConfigurationError(f'Unknown keys in {document}: {sorted(unknown)}.')
        extra = _merge(extra, {k: v for k, v in doc.items() if k in extra})
        attrs.update({k: v for k, v in doc.items() if k in names})
    unknown = set(overrides) - names
    if unknown:
        raise ConfigurationError(f'Unknown overrides: {sorted(unknown)}.')
    attrs.update({k: v for k, v in overrides.items() if v is not None})

    scenario = {
        'mission': Mission.load(config_file(attrs['mission'])).model_dump(),
        'turbulence': attrs['turbulence'],
        'acoustic_grid': attrs['acoustic_grid'],
        'waypoint_jitter': attrs['waypoint_jitter'],
        'dt': attrs['dt'],
        'seed': attrs['seed'],
    }
    scenario = Scenario.model_validate(_merge(scenario, extra['scenario']))

    warm = None
    if attrs['warm_start']:
        warm = GainVector.load(config_file(attrs['warm_start']))
    bounds = SearchBounds.load(config_file(attrs['bounds']))
    space = SearchSpace.from_bounds(bounds, warm, frozen=attrs['frozen'])
    max_seconds = None if attrs['max_hours'] is None else 3600.0 * attrs['max_hours']
    campaign = CampaignSpec(methods=list(attrs['methods']),
                            space=space,
                            budget=Budget(max_evals=attrs['max_evals'], max_seconds=max_seconds),
                            seeds=list(attrs['seeds']),
                            optimizer=extra['optimizer'],
                            calibrate=attrs['calibrate'],
                            workers=attrs['workers'])
    attrs = {k: list(v) if isinstance(v, tuple) else v for k, v in attrs.items()}
    return RunConfig(preset=preset, scenario=scenario, campaign=campaign, attributes=attrs)
