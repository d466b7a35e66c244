from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

# Base-ten third-octave centers 1000 * 10**(k / 10); k = -17..13 spans 20 Hz to 20 kHz.
BAND_INDEX_RANGE = (-17, 13)
_RATIO = 2.0**(1.0 / 3.0)


def third_octave_centers(lo: int = BAND_INDEX_RANGE[0], hi: int = BAND_INDEX_RANGE[1]) -> np.ndarray:
    if hi < lo:
        raise ValueError(f'Empty band range [{lo}, {hi}].')
    return 1000.0 * 10.0**(np.arange(lo, hi + 1) / 10.0)


def power_sum(levels, axis: int = -1) -> np.ndarray:
    """Incoherent sum of dB levels along `axis`."""
    levels = np.asarray(levels, dtype=float)
    with np.errstate(divide='ignore'):
        return 10.0 * np.log10(np.sum(10.0**(levels / 10.0), axis=axis))


@dataclass(eq=False)
class ThirdOctaveSpectrum:
    centers: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float)
        self.levels = np.asarray(self.levels, dtype=float)
        if self.centers.ndim != 1 or self.centers.shape != self.levels.shape:
            raise ValueError(f'Centers {self.centers.shape} and levels {self.levels.shape} do not match.')
        if self.centers.size > 1:
            ratios = self.centers[1:] / self.centers[:-1]
            if np.any(np.abs(ratios / _RATIO - 1.0) > 0.01):
                raise ValueError('Adjacent band centers must be one third of an octave apart.')
        if np.any(np.isnan(self.levels)):
            raise ValueError('Band levels contain NaN.')

    def __len__(self) -> int:
        return self.centers.size

    def shifted(self, db) -> ThirdOctaveSpectrum:
        return ThirdOctaveSpectrum(self.centers, self.levels + db)

    def broadband(self) -> float:
        return broadband(self)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'center_hz': self.centers, 'level_db': self.levels})

    def to_json(self) -> Dict[str, List[float]]:
        return {'centers': self.centers.tolist(), 'levels': self.levels.tolist()}

    @classmethod
    def from_json(cls, data: Dict[str, Sequence[float]]) -> ThirdOctaveSpectrum:
        return cls(data['centers'], data['levels'])


def broadband(spec) -> float:
    levels = spec.levels if isinstance(spec, ThirdOctaveSpectrum) else spec
    return float(power_sum(levels))


def combine(spectra: Sequence[ThirdOctaveSpectrum]) -> ThirdOctaveSpectrum:
    """Band-wise power sum of sources that share one band set."""
    centers = spectra[0].centers
    for spec in spectra[1:]:
        if not np.array_equal(spec.centers, centers):
            raise ValueError('Spectra do not share a band set.')
    return ThirdOctaveSpectrum(centers, power_sum(np.stack([s.levels for s in spectra]), axis=0))
