"""Per-rotor sound power spectra as a function of rotor speed and radiation angle.

Two emission models share one interface:

* `ParametricEmission`: a reference hover spectrum shifted by 10 k log10(omega / omega_ref),
  plus a sampled directivity correction.
* `PolynomialEmission`: per-band second-order polynomial in the rotor-speed and angle
  deviations from the reference condition, with directivity embedded.

Both are JSON documents told apart by `kind`. Radiation angles are measured from the
downward rotor axis, so 0 points straight at the ground below a level vehicle.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, PrivateAttr, TypeAdapter, model_validator

from quadtune.acoustics.bands import BAND_INDEX_RANGE, ThirdOctaveSpectrum, power_sum, third_octave_centers
from quadtune.errors import DomainError
from quadtune.utils import PathLike, read_json, write_json

# A single rotor carries a quarter of the four-rotor hover power.
SINGLE_ROTOR_DB = 6.0


def _default_intensity(n_cells: int = 18) -> List[List[float]]:
    mid = (np.arange(n_cells) + 0.5) * math.pi / n_cells
    return [(1.0 + 0.5 * np.cos(mid)**2).tolist()]


class DirectivityPattern(BaseModel):
    """Intensity sampled on equal polar cells over [0, pi], one row per frequency or a single row."""

    intensity: List[List[float]] = Field(default_factory=_default_intensity)
    frequencies: Optional[List[float]] = None

    @model_validator(mode='after')
    def _check_shape(self) -> DirectivityPattern:
        widths = {len(row) for row in self.intensity}
        if not self.intensity or len(widths) != 1 or 0 in widths:
            raise ValueError('Intensity rows must be non-empty and equally long.')
        if len(self.intensity) > 1 and (self.frequencies is None or len(self.frequencies) != len(self.intensity)):
            raise ValueError('A frequency-dependent pattern needs one frequency per row.')
        return self

    @property
    def n_cells(self) -> int:
        return len(self.intensity[0])

    def edges(self) -> np.ndarray:
        return np.linspace(0.0, math.pi, self.n_cells + 1)

    def spherical_mean(self) -> np.ndarray:
        """Sphere-averaged intensity per row, exact for a piecewise-constant pattern."""
        intensity = np.asarray(self.intensity, dtype=float)
        if np.any(intensity <= 0.0):
            raise DomainError('Directivity intensity must be positive everywhere.')
        edges = self.edges()
        weights = 0.5 * (np.cos(edges[:-1]) - np.cos(edges[1:]))
        return intensity @ weights

    def cell_index(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        idx = np.floor(theta / (math.pi / self.n_cells)).astype(int)
        return np.clip(idx, 0, self.n_cells - 1)

    def row_index(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if self.frequencies is None:
            return np.zeros(f.shape, dtype=int)
        log_f = np.log(np.asarray(self.frequencies))
        return np.argmin(np.abs(np.log(f)[..., None] - log_f), axis=-1)

    def table(self, centers) -> np.ndarray:
        """DI in dB, shape (len(centers), n_cells)."""
        intensity = np.asarray(self.intensity, dtype=float)
        di = 10.0 * np.log10(intensity / self.spherical_mean()[:, None])
        return di[self.row_index(centers)]


def directivity_index(f, theta, pattern: DirectivityPattern) -> np.ndarray:
    f, theta = np.broadcast_arrays(np.asarray(f, dtype=float), np.asarray(theta, dtype=float))
    intensity = np.asarray(pattern.intensity, dtype=float)
    rows = pattern.row_index(f)
    mean = pattern.spherical_mean()[rows]
    return 10.0 * np.log10(intensity[rows, pattern.cell_index(theta)] / mean)


def default_reference_levels(centers: np.ndarray,
                             omega_ref: float,
                             blade_count: int = 2,
                             total_db: float = 85.0,
                             slope: float = 4.0) -> np.ndarray:
    """Broadband hump peaking at the blade-passing band, scaled to `total_db` overall."""
    bpf = omega_ref * blade_count / 60.0
    shape = -slope * np.abs(np.log2(centers / bpf))
    return shape + total_db - power_sum(shape)


class _EmissionBase(BaseModel, ABC):
    band_lo: int = BAND_INDEX_RANGE[0]
    band_hi: int = BAND_INDEX_RANGE[1]
    # RPM
    omega_ref: float = Field(2500.0, gt=0.0)
    silence_floor: float = 0.0

    def centers(self) -> np.ndarray:
        return third_octave_centers(self.band_lo, self.band_hi)

    @abstractmethod
    def rotor_levels(self, omega, zeta=None) -> np.ndarray:
        """Single-rotor band levels for one speed or an array of speeds, shape (..., n_bands)."""

    def source_levels(self, omegas) -> np.ndarray:
        """Direction-free band levels of all rotors together."""
        return power_sum(self.rotor_levels(np.asarray(omegas, dtype=float)), axis=0)


class ParametricEmission(_EmissionBase):
    kind: Literal['parametric'] = 'parametric'
    # Four-rotor hover spectrum at omega_ref; a synthetic hump when omitted.
    reference_levels: Optional[List[float]] = None
    rpm_exponent: float = 5.0
    blade_count: int = Field(2, ge=1)
    directivity: Optional[DirectivityPattern] = Field(default_factory=DirectivityPattern)

    _base: Optional[np.ndarray] = PrivateAttr(None)
    _di: Optional[np.ndarray] = PrivateAttr(None)

    @model_validator(mode='after')
    def _check_reference(self) -> ParametricEmission:
        n = self.band_hi - self.band_lo + 1
        if self.reference_levels is not None:
            ref = np.asarray(self.reference_levels, dtype=float)
            if ref.shape != (n, ):
                raise ValueError(f'Expected {n} reference levels, got {ref.size}.')
            if not np.all(np.isfinite(ref)):
                raise ValueError('Reference levels must be finite.')
        return self

    def _prepare(self) -> np.ndarray:
        if self._base is None:
            centers = self.centers()
            if self.reference_levels is None:
                ref = default_reference_levels(centers, self.omega_ref, self.blade_count)
            else:
                ref = np.asarray(self.reference_levels, dtype=float)
            if self.directivity is not None:
                self._di = self.directivity.table(centers)
            self._base = ref - SINGLE_ROTOR_DB
        return self._base

    def reference(self) -> ThirdOctaveSpectrum:
        return ThirdOctaveSpectrum(self.centers(), self._prepare() + SINGLE_ROTOR_DB)

    def di(self, zeta) -> np.ndarray:
        base = self._prepare()
        if self._di is None:
            return np.zeros(np.shape(zeta) + base.shape)
        return np.moveaxis(self._di[:, self.directivity.cell_index(zeta)], 0, -1)

    def rotor_levels(self, omega, zeta=None) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if np.any(omega < 0.0):
            raise DomainError('Rotor speed must be non-negative.')
        with np.errstate(divide='ignore'):
            shift = 10.0 * self.rpm_exponent * np.log10(omega / self.omega_ref)
        levels = self._prepare() + shift[..., None]
        if zeta is not None:
            levels = levels + self.di(zeta)
        return np.maximum(levels, self.silence_floor)


class PolynomialEmission(_EmissionBase):
    kind: Literal['polynomial'] = 'polynomial'
    # One row per band: (c0, c_w, c_ww, c_z, c_zz) over normalized speed and angle deviations.
    coefficients: List[List[float]]
    zeta_ref: float = 0.0

    @model_validator(mode='after')
    def _check_coefficients(self) -> PolynomialEmission:
        n = self.band_hi - self.band_lo + 1
        coef = np.asarray(self.coefficients, dtype=float)
        if coef.shape != (n, 5):
            raise ValueError(f'Expected coefficients of shape ({n}, 5), got {coef.shape}.')
        if not np.all(np.isfinite(coef)):
            raise ValueError('Coefficients must be finite.')
        return self

    def rotor_levels(self, omega, zeta=None) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if np.any(omega < 0.0):
            raise DomainError('Rotor speed must be non-negative.')
        dw = (omega / self.omega_ref - 1.0)[..., None]
        dz = 0.0 if zeta is None else (np.asarray(zeta, dtype=float) - self.zeta_ref)[..., None]
        c = np.asarray(self.coefficients, dtype=float).T
        levels = c[0] + c[1] * dw + c[2] * dw**2 + c[3] * dz + c[4] * dz**2 - SINGLE_ROTOR_DB
        # A stopped rotor is silent.
        return np.where((omega > 0.0)[..., None], np.maximum(levels, self.silence_floor), self.silence_floor)


EmissionModel = Annotated[Union[ParametricEmission, PolynomialEmission], Field(discriminator='kind')]
_adapter = TypeAdapter(EmissionModel)


def load_emission_model(path: PathLike) -> EmissionModel:
    return _adapter.validate_python(read_json(path))


def parse_emission_model(data) -> EmissionModel:
    return _adapter.validate_python(data)


def save_emission_model(path: PathLike, model: EmissionModel):
    write_json(path, model)


def emit_spectrum(model: EmissionModel, omega: float, zeta: Optional[float] = None) -> ThirdOctaveSpectrum:
    """Single-rotor sound power spectrum at `omega` RPM, seen at radiation angle `zeta`.

    Without an angle the directivity correction is left out.
    """
    return ThirdOctaveSpectrum(model.centers(), model.rotor_levels(float(omega), zeta))
