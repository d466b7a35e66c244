"""Blade element momentum solver for a rotor in hover and axial climb."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import optimize

from quadtune.errors import ConvergenceError, DomainError

ArrayOrFloat = Union[float, np.ndarray]

RHO = 1.225
RPM2RAD = 2.0 * math.pi / 60.0


class AirfoilPolar(BaseModel):
    """Section lift and drag curves.

    Either sampled curves (`alpha`, `cl`, `cd`, linearly interpolated and held constant
    outside the sampled range) or the analytic thin-plate form
    C_L = slope * alpha clipped at +-cl_max, C_D = cd0 + cd2 * alpha**2.
    """

    alpha: Optional[List[float]] = None
    cl: Optional[List[float]] = None
    cd: Optional[List[float]] = None
    cl_slope: float = 2.0 * math.pi
    cl_max: float = Field(1.2, gt=0.0)
    cd0: float = Field(0.011, ge=0.0)
    cd2: float = Field(0.8, ge=0.0)

    @model_validator(mode='after')
    def _check_samples(self) -> AirfoilPolar:
        sampled = [self.alpha is not None, self.cl is not None, self.cd is not None]
        if any(sampled) and not all(sampled):
            raise ValueError('alpha, cl and cd must be given together.')
        if all(sampled):
            if not (len(self.alpha) == len(self.cl) == len(self.cd) >= 2):
                raise ValueError('Sampled polar needs at least two points of equal length.')
            if np.any(np.diff(self.alpha) <= 0.0):
                raise ValueError('Polar angles must be strictly increasing.')
        return self

    def coefficients(self, alpha: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if self.alpha is not None:
            return np.interp(alpha, self.alpha, self.cl), np.interp(alpha, self.alpha, self.cd)
        cl = np.clip(self.cl_slope * alpha, -self.cl_max, self.cl_max)
        cd = self.cd0 + self.cd2 * alpha**2
        return cl, cd


class RotorGeometry(BaseModel):
    radius: float = Field(0.3, gt=0.0)
    hub_radius: float = Field(0.02, ge=0.0)
    blade_count: int = Field(2, ge=1)
    section_count: int = Field(8, ge=2)
    chord: Optional[List[float]] = None
    twist: Optional[List[float]] = None
    polar: AirfoilPolar = Field(default_factory=AirfoilPolar)
    # Prandtl tip and hub losses in the momentum balance.
    tip_loss: bool = False

    @model_validator(mode='after')
    def _fill_schedules(self) -> RotorGeometry:
        if self.radius <= self.hub_radius:
            raise ValueError(f'radius {self.radius} must exceed hub_radius {self.hub_radius}.')
        r, _ = self.stations()
        # Linear taper and an ideal-twist-like schedule with a constant design incidence.
        if self.chord is None:
            span = (r - self.hub_radius) / (self.radius - self.hub_radius)
            self.chord = (0.040 - 0.010 * span).tolist()
        if self.twist is None:
            self.twist = (np.arctan(0.06 * self.radius / r) + 0.1).tolist()
        if len(self.chord) != self.section_count or len(self.twist) != self.section_count:
            raise ValueError(f'chord and twist need {self.section_count} entries.')
        if min(self.chord) <= 0.0:
            raise ValueError('Chord must be positive at every section.')
        return self

    def stations(self) -> Tuple[np.ndarray, float]:
        """Section midpoints and the uniform section width."""
        dr = (self.radius - self.hub_radius) / self.section_count
        r = self.hub_radius + (np.arange(self.section_count) + 0.5) * dr
        return r, dr

    @property
    def disk_area(self) -> float:
        return math.pi * self.radius**2


@dataclass(frozen=True)
class RotorPerformance:
    thrust: ArrayOrFloat
    torque: ArrayOrFloat
    power: ArrayOrFloat
    ct: ArrayOrFloat
    cq: ArrayOrFloat
    cp: ArrayOrFloat

    @classmethod
    def field_names(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def as_tuple(self) -> Tuple[ArrayOrFloat, ...]:
        return tuple(getattr(self, name) for name in self.field_names())


@dataclass(frozen=True)
class BemtSolution:
    performance: RotorPerformance
    induced_velocity: float
    residual: float
    iterations: int


def prandtl_loss(geom: RotorGeometry, r: np.ndarray, phi: ArrayOrFloat) -> np.ndarray:
    """Prandtl tip and hub loss factor F in (0, 1] at stations `r` and inflow angles `phi`."""
    s = np.abs(np.sin(phi))
    half_b = 0.5 * geom.blade_count
    with np.errstate(divide='ignore'):
        loss = 2.0 / math.pi * np.arccos(np.exp(-half_b * (geom.radius - r) / (r * s)))
        if geom.hub_radius > 0.0:
            loss = loss * 2.0 / math.pi * np.arccos(np.exp(-half_b * (r - geom.hub_radius) / (geom.hub_radius * s)))
    return loss


def momentum_area(geom: RotorGeometry, omega: float, v_axial: float) -> float:
    """Disk area seen by the momentum balance, sum of 2 pi r F dr when losses are on. `omega` in rad/s."""
    if not geom.tip_loss:
        return geom.disk_area
    r, dr = geom.stations()
    phi = np.arctan2(v_axial, omega * r)
    return float(np.sum(2.0 * math.pi * r * prandtl_loss(geom, r, phi) * dr))


def _blade_loads(geom: RotorGeometry, omega: float, v_axial: float, rho: float) -> Tuple[float, float]:
    r, dr = geom.stations()
    chord = np.asarray(geom.chord)
    twist = np.asarray(geom.twist)
    ut = omega * r
    phi = np.arctan2(v_axial, ut)
    alpha = twist - phi
    cl, cd = geom.polar.coefficients(alpha)
    q = 0.5 * rho * (v_axial**2 + ut**2) * chord * dr * geom.blade_count
    thrust = float(np.sum(q * (cl * np.cos(phi) - cd * np.sin(phi))))
    torque = float(np.sum(q * (cl * np.sin(phi) + cd * np.cos(phi)) * r))
    return thrust, torque


def bemt_solve_full(geom: RotorGeometry,
                    omega: float,
                    v_inf: float,
                    rho: float = RHO,
                    *,
                    tol: float = 1e-10,
                    relaxation: float = 0.3,
                    max_iter: int = 500) -> BemtSolution:
    if omega < 0.0 or v_inf < 0.0 or rho <= 0.0:
        raise DomainError(f'Need omega >= 0, v_inf >= 0 and rho > 0, got {omega}, {v_inf}, {rho}.')
    if omega == 0.0:
        zero = RotorPerformance(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        return BemtSolution(zero, 0.0, 0.0, 0)

    om = omega * RPM2RAD
    v = 0.0
    residual = math.inf
    for it in range(1, max_iter + 1):
        thrust, torque = _blade_loads(geom, om, v_inf + v, rho)
        # A blade row loaded negatively sits in the windmill-brake state, where momentum
        # balance has no solution; it carries no thrust and no induced flow.
        thrust = max(thrust, 0.0)
        area = momentum_area(geom, om, v_inf + v)
        t_mom = 2.0 * rho * area * v * (v_inf + v)
        residual = abs(thrust - t_mom) / max(abs(thrust), 1e-9)
        if residual <= tol:
            break
        v_target = 0.5 * (-v_inf + math.sqrt(max(v_inf**2 + 2.0 * thrust / (rho * area), 0.0)))
        v += relaxation * (v_target - v)
    else:
        raise ConvergenceError(residual, max_iter, omega, v_inf)

    power = torque * om
    tip = om * geom.radius
    denom = rho * geom.disk_area * tip**2
    perf = RotorPerformance(thrust=thrust,
                            torque=torque,
                            power=power,
                            ct=thrust / denom,
                            cq=torque / (denom * geom.radius),
                            cp=power / (denom * tip))
    return BemtSolution(perf, v, residual, it)


def bemt_solve(geom: RotorGeometry, omega: float, v_inf: float, rho: float = RHO, **kwargs) -> RotorPerformance:
    """Rotor loads at `omega` RPM in an axial freestream of `v_inf` m/s."""
    return bemt_solve_full(geom, omega, v_inf, rho, **kwargs).performance


def find_hover_omega(geom: RotorGeometry,
                     thrust: float,
                     v_inf: float = 0.0,
                     rho: float = RHO,
                     omega_max: float = 10000.0,
                     xtol: float = 1e-8) -> float:
    """Rotor speed in RPM that produces `thrust`, found by bisection."""

    def excess(omega: float) -> float:
        return bemt_solve(geom, omega, v_inf, rho).thrust - thrust

    if excess(omega_max) < 0.0:
        raise DomainError(f'{thrust:.3f} N is out of reach below {omega_max} RPM.')
    return float(optimize.bisect(excess, 0.0, omega_max, xtol=xtol))
