from __future__ import annotations

import json
import logging
import sys
import zlib
from pathlib import Path
from typing import Any, Iterable, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel
from tqdm import tqdm

IMP = 25

PathLike = Union[str, Path]


def register_imp_level():
    """Add an IMP level between INFO and WARNING, reachable as `logging.imp`."""
    if hasattr(logging, 'imp'):
        return
    logging.addLevelName(IMP, 'IMP')

    def imp(msg, *args, **kwargs):
        logging.log(IMP, msg, *args, **kwargs)

    logging.imp = imp


def setup_logging(log_dir: Optional[PathLike] = None, level: Union[str, int] = 'INFO'):
    register_imp_level()
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    root.setLevel(level)
    fmt = logging.Formatter('%(asctime)s %(levelname)s %(name)s: %(message)s', datefmt='%H:%M:%S')
    stream = logging.StreamHandler(sys.stderr)
    stream.setFormatter(fmt)
    root.addHandler(stream)
    if log_dir is not None:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_dir / 'log', mode='a', encoding='utf8')
        file_handler.setFormatter(fmt)
        root.addHandler(file_handler)


def show_config(name: str, config: BaseModel):
    rows = [(k, v) for k, v in _flatten(config.model_dump(mode='json'))]
    table = pd.DataFrame(rows, columns=['key', 'value'])
    logging.info(f'{name}:\n' + table.to_string(index=False))


def _flatten(obj: Any, prefix: str = ''):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f'{prefix}{k}.')
    elif isinstance(obj, list) and len(obj) > 6:
        yield prefix[:-1], f'[{len(obj)} items]'
    else:
        yield prefix[:-1], obj


def _fold(name: Union[str, int]) -> int:
    if isinstance(name, (int, np.integer)):
        if name < 0:
            raise ValueError(f'Seed names must be non-negative, got {name}.')
        return int(name)
    return zlib.crc32(str(name).encode('utf8'))


def derive_seed(base: int, *names: Union[str, int]) -> np.random.SeedSequence:
    """Named seed derivation: `derive_seed(0, 'gust', 'rotor', 2)`."""
    return np.random.SeedSequence([_fold(base)] + [_fold(n) for n in names])


def make_rng(base: int, *names: Union[str, int]) -> np.random.Generator:
    return np.random.default_rng(derive_seed(base, *names))


def derive_int(base: int, *names: Union[str, int]) -> int:
    return int(derive_seed(base, *names).generate_state(1)[0])


def write_json(path: PathLike, obj: Any):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(obj, BaseModel):
        obj = obj.model_dump(mode='json')
    with path.open('w', encoding='utf8') as fout:
        json.dump(obj, fout, indent=2, sort_keys=True)
        fout.write('\n')


def read_json(path: PathLike) -> Any:
    with Path(path).open('r', encoding='utf8') as fin:
        return json.load(fin)


def write_csv(path: PathLike, df: pd.DataFrame):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format='%.10g', lineterminator='\n')


def pbar(iterable: Iterable, desc: str, total: Optional[int] = None, enabled: bool = True):
    return tqdm(iterable, desc=desc, total=total, disable=not enabled or not sys.stderr.isatty(), leave=False)


def progress(desc: str, total: Optional[int] = None, enabled: bool = True) -> tqdm:
    """A manually updated bar, for loops that advance by batches."""
    return tqdm(desc=desc, total=total, disable=not enabled or not sys.stderr.isatty(), leave=False)
