"""Free-field propagation: spherical spreading and ISO 9613-1 atmospheric absorption."""
from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from quadtune.acoustics.bands import ThirdOctaveSpectrum
from quadtune.errors import DomainError

P_REF = 101.325  # kPa


class AtmosphereConditions(BaseModel):
    temperature: float = Field(293.15, gt=0.0)
    reference_temperature: float = Field(293.15, gt=0.0)
    relative_pressure: float = Field(1.0, gt=0.0)
    relative_humidity: float = Field(0.7, ge=0.0, le=1.0)
    # kPa
    ambient_pressure: float = Field(P_REF, gt=0.0)
    absorption: bool = True


def saturation_pressure(temperature: float) -> float:
    """Saturation vapour pressure in kPa, Magnus form."""
    tc = temperature - 273.15
    return 0.61094 * math.exp(17.625 * tc / (tc + 243.04))


def molar_humidity(cond: AtmosphereConditions) -> float:
    """Molar concentration of water vapour in percent."""
    return 100.0 * cond.relative_humidity * saturation_pressure(cond.temperature) / cond.ambient_pressure


def relaxation_frequencies(cond: AtmosphereConditions) -> Tuple[float, float]:
    h = molar_humidity(cond)
    tr = cond.temperature / cond.reference_temperature
    pr = cond.relative_pressure
    fr_o = pr * (24.0 + 4.04e4 * h * (0.02 + h) / (0.391 + h))
    fr_n = pr * tr**-0.5 * (9.0 + 280.0 * h * math.exp(-4.170 * (tr**(-1.0 / 3.0) - 1.0)))
    return fr_o, fr_n


def absorption_coeff(f, cond: AtmosphereConditions) -> np.ndarray:
    """Pure-tone absorption in dB/m at frequency `f` (Hz)."""
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0.0):
        raise DomainError('Absorption needs positive frequencies.')
    t = cond.temperature
    tr = t / cond.reference_temperature
    fr_o, fr_n = relaxation_frequencies(cond)
    f2 = f * f
    classical = 1.84e-11 / cond.relative_pressure * tr**0.5
    oxygen = 0.01275 * math.exp(-2239.1 / t) / (fr_o + f2 / fr_o)
    nitrogen = 0.1068 * math.exp(-3352.0 / t) / (fr_n + f2 / fr_n)
    return 8.686 * f2 * (classical + tr**-2.5 * (oxygen + nitrogen))


def spherical_spreading(d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0.0):
        raise DomainError('Receiver coincides with the source.')
    return 10.0 * np.log10(4.0 * np.pi * d * d)


def received_spl(lw: ThirdOctaveSpectrum,
                 d: float,
                 cond: AtmosphereConditions,
                 di=0.0,
                 alpha: Optional[np.ndarray] = None) -> ThirdOctaveSpectrum:
    """Band levels at distance `d`; `alpha` overrides the computed absorption."""
    if alpha is None:
        alpha = absorption_coeff(lw.centers, cond) if cond.absorption else np.zeros(len(lw))
    levels = lw.levels - spherical_spreading(d) - alpha * d + di
    return ThirdOctaveSpectrum(lw.centers, levels)
