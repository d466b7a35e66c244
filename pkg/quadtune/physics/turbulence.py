"""Dryden gust series and the thrust increment they induce on a rotor disk."""
from __future__ import annotations

import math
from typing import Literal, NamedTuple, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy import signal

from quadtune.errors import DomainError
from quadtune.utils import make_rng

Component = Literal['u', 'v', 'w']
COMPONENTS = ('u', 'v', 'w')


class DrydenParams(BaseModel):
    sigma_u: float = Field(1.06, ge=0.0)
    sigma_v: float = Field(1.06, ge=0.0)
    sigma_w: float = Field(0.7, ge=0.0)
    length_u: float = Field(200.0, gt=0.0)
    length_v: float = Field(200.0, gt=0.0)
    length_w: float = Field(50.0, gt=0.0)
    airspeed: float = Field(10.0, gt=0.0)
    seed: int = Field(0, ge=0)
    # One gust stream per rotor instead of one shared stream.
    independent_rotors: bool = False
    # Share of the closed-form increment that reaches the airframe.
    thrust_scale: float = Field(0.01, ge=0.0)
    realization: Literal['filter', 'spectral'] = 'filter'

    def sigma(self, component: Component) -> float:
        return getattr(self, f'sigma_{component}')

    def length(self, component: Component) -> float:
        return getattr(self, f'length_{component}')


class GustSample(NamedTuple):
    u_turb: float
    v_turb: float
    w_turb: float


ArrayOrFloat = Union[float, np.ndarray]


def dryden_psd(component: Component, omega_sp: ArrayOrFloat, params: DrydenParams) -> ArrayOrFloat:
    """One-sided spatial PSD at spatial frequency `omega_sp` (rad/m)."""
    if np.any(np.asarray(omega_sp) < 0.0):
        raise DomainError('Spatial frequency must be non-negative.')
    sigma = params.sigma(component)
    length = params.length(component)
    lo2 = (length * np.asarray(omega_sp, dtype=float))**2
    if component == 'u':
        ret = sigma**2 * 2.0 * length / math.pi / (1.0 + lo2)
    else:
        ret = sigma**2 * length / math.pi * (1.0 + 3.0 * lo2) / (1.0 + lo2)**2
    return float(ret) if np.ndim(ret) == 0 else ret


def temporal_psd(component: Component, freq: ArrayOrFloat, params: DrydenParams) -> ArrayOrFloat:
    """One-sided PSD per Hz seen by a vehicle moving at `params.airspeed` through frozen turbulence."""
    scale = 2.0 * math.pi / params.airspeed
    return scale * dryden_psd(component, scale * np.asarray(freq, dtype=float), params)


def shaping_filter(component: Component, params: DrydenParams, dt: float):
    """Bilinear discretization of the unit-gain Dryden shaping filter."""
    tau = params.length(component) / params.airspeed
    if component == 'u':
        b, a = [1.0], [tau, 1.0]
    else:
        b, a = [math.sqrt(3.0) * tau, 1.0], [tau**2, 2.0 * tau, 1.0]
    return signal.bilinear(b, a, fs=1.0 / dt)


class DrydenGenerator:
    """Seeded gust source. Every stream index gives an independent, reproducible series."""

    def __init__(self, params: DrydenParams, dt: float):
        if dt <= 0.0:
            raise DomainError(f'dt must be positive, got {dt}.')
        self.params = params
        self.dt = dt

    def _filtered(self, component: Component, n: int, rng: np.random.Generator) -> np.ndarray:
        b, a = shaping_filter(component, self.params, self.dt)
        tau = self.params.length(component) / self.params.airspeed
        n_corr = int(math.ceil(tau / self.dt))
        burn_in = 5 * n_corr
        impulse = np.zeros(20 * n_corr + 16)
        impulse[0] = 1.0
        energy = float(np.sum(signal.lfilter(b, a, impulse)**2))
        out = signal.lfilter(b, a, rng.standard_normal(n + burn_in))[burn_in:]
        return out * self.params.sigma(component) / math.sqrt(energy)

    def _spectral(self, component: Component, n: int, rng: np.random.Generator) -> np.ndarray:
        freq = np.fft.rfftfreq(n, self.dt)
        amp = np.sqrt(temporal_psd(component, freq, self.params))
        amp[0] = 0.0
        if n % 2 == 0:
            amp[-1] = 0.0
        phase = rng.uniform(0.0, 2.0 * math.pi, freq.size)
        var = 2.0 * np.sum(amp**2) / n**2
        if var == 0.0:
            return np.zeros(n)
        coef = amp * np.exp(1j * phase) * self.params.sigma(component) / math.sqrt(var)
        return np.fft.irfft(coef, n)

    def generate(self, n: int, stream: int = 0) -> np.ndarray:
        """Gust velocities of shape (n, 3), columns u, v, w in m/s."""
        if n < 1:
            raise DomainError(f'Need at least one sample, got {n}.')
        ret = np.zeros([n, 3])
        for k, component in enumerate(COMPONENTS):
            if self.params.sigma(component) == 0.0:
                continue
            rng = make_rng(self.params.seed, 'gust', stream, component)
            if self.params.realization == 'filter':
                ret[:, k] = self._filtered(component, n, rng)
            else:
                ret[:, k] = self._spectral(component, n, rng)
        return ret

    def rotor_gusts(self, n: int, n_rotors: int = 4) -> np.ndarray:
        """Per-rotor gusts of shape (n, n_rotors, 3)."""
        if self.params.independent_rotors:
            return np.stack([self.generate(n, stream=i) for i in range(n_rotors)], axis=1)
        shared = self.generate(n)
        return np.repeat(shared[:, None, :], n_rotors, axis=1)


def generate_gusts(params: DrydenParams, dt: float, n: int) -> np.ndarray:
    return DrydenGenerator(params, dt).generate(n)


def thrust_increment(gust: GustSample, omega: float, r1: float, r2: float, rho: float = 1.225) -> float:
    """Closed-form gust thrust over the annulus r1..r2 of a rotor spinning at `omega` rad/s."""
    if omega <= 0.0:
        raise DomainError(f'Rotor speed must be positive, got {omega}.')
    if not r2 > r1 > 0.0:
        raise DomainError(f'Need r2 > r1 > 0, got r1={r1}, r2={r2}.')
    u, v, w = gust
    k = 2.0 * math.pi**2 * w
    return 0.5 * rho * (k * omega * (r2**2 - r1**2) + k / omega * (u**2 + v**2) * math.log(r2 / r1))
