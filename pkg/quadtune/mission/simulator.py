"""Closed-loop mission rollouts: cascade control, rotor table, gusts, acoustics and cost."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from quadtune.acoustics.bands import broadband
from quadtune.acoustics.emission import EmissionModel, ParametricEmission
from quadtune.acoustics.grid import GridConfig, GroundGrid, grid_step
from quadtune.acoustics.propagation import AtmosphereConditions
from quadtune.aero.bemt import RHO, RPM2RAD, RotorGeometry
from quadtune.aero.surrogate import (FIELDS, SurrogateTable, build_surrogate, fit_drag_factor, fit_thrust_constant,
                                     surrogate_hover_omega)
from quadtune.control.cascade import CascadeController, ControllerLimits, Setpoint
from quadtune.control.gains import GainVector
from quadtune.control.mixer import MixerParams, mix
from quadtune.errors import SimulationDiverged
from quadtune.mission.cost import (ABORT_DIVERGED, AbortPolicy, CostBreakdown, CostWeights, FlightProgress,
                                   compute_terms, early_abort)
from quadtune.mission.mission import Mission, jitter_mission
from quadtune.physics.dynamics import KinematicsStats, RotorInputs, VehicleParams, VehicleState, rk4_step
from quadtune.physics.turbulence import DrydenGenerator, DrydenParams, GustSample, thrust_increment
from quadtune.utils import make_rng

TRAJECTORY_COLUMNS = ('t', 'x', 'y', 'z', 'vx', 'vy', 'vz', 'phi', 'theta', 'psi', 'p', 'q', 'r', 'rpm1', 'rpm2',
                      'rpm3', 'rpm4', 'thrust', 'power', 'swl')


class AeroGrid(BaseModel):
    """Rotor table used inside the loop, built on first use or read from `table_path`."""
    omega_max: float = Field(4000.0, gt=0.0)
    v_max: float = Field(20.0, gt=0.0)
    n_omega: int = Field(100, ge=2)
    n_v: int = Field(80, ge=1)
    table_path: Optional[str] = None
    workers: int = Field(1, ge=1)

    def grids(self):
        return np.linspace(0.0, self.omega_max, self.n_omega), np.linspace(0.0, self.v_max, self.n_v)


class Scenario(BaseModel):
    mission: Mission
    dt: float = Field(0.008, gt=0.0)
    turbulence: bool = False
    dryden: DrydenParams = Field(default_factory=DrydenParams)
    vehicle: VehicleParams = Field(default_factory=VehicleParams)
    rotor: RotorGeometry = Field(default_factory=RotorGeometry)
    rho: float = Field(RHO, gt=0.0)
    aero: AeroGrid = Field(default_factory=AeroGrid)
    # 'fitted' takes d from the rotor table, 'vehicle' from VehicleParams.drag_factor.
    mixer_drag: Union[Literal['fitted', 'vehicle'], float] = 'fitted'
    max_rpm: float = Field(3000.0, gt=0.0)
    limits: ControllerLimits = Field(default_factory=ControllerLimits)
    emission: EmissionModel = Field(default_factory=ParametricEmission)
    atmosphere: AtmosphereConditions = Field(default_factory=AtmosphereConditions)
    grid: GridConfig = Field(default_factory=GridConfig)
    acoustic_grid: bool = False
    weights: CostWeights = Field(default_factory=CostWeights)
    abort: AbortPolicy = Field(default_factory=AbortPolicy)
    target_threshold: float = Field(2.0, gt=0.0)
    termination_threshold: float = Field(2.0, ge=0.0)
    # False keeps flying to max_time after the final waypoint is reached.
    complete_on_reach: bool = True
    waypoint_jitter: float = Field(0.0, ge=0.0)
    seed: int = Field(0, ge=0)

    def plant_key(self) -> str:
        keys = ['vehicle', 'rotor', 'rho', 'aero', 'mixer_drag', 'max_rpm']
        return self.model_dump_json(include=set(keys))


@dataclass
class Plant:
    table: SurrogateTable
    hover_rpm: float
    thrust_constant: float
    drag_factor: float
    mixer: MixerParams


_PLANTS: Dict[str, Plant] = dict()


def _build_plant(scenario: Scenario) -> Plant:
    aero = scenario.aero
    if aero.table_path is not None:
        table = SurrogateTable.load(aero.table_path)
    else:
        table = build_surrogate(scenario.rotor, *aero.grids(), rho=scenario.rho, workers=aero.workers)
    weight = scenario.vehicle.weight / 4.0
    hover = surrogate_hover_omega(table, weight)
    k_t = fit_thrust_constant(table, hover)
    if scenario.mixer_drag == 'fitted':
        d = fit_drag_factor(table, hover)
    elif scenario.mixer_drag == 'vehicle':
        d = scenario.vehicle.drag_factor
    else:
        d = float(scenario.mixer_drag)
    mixer = MixerParams(arm_length=scenario.vehicle.arm_length,
                        thrust_constant=k_t,
                        drag_factor=d,
                        max_omega=scenario.max_rpm * RPM2RAD)
    logging.info(f'Plant ready: hover {hover:.1f} RPM, k_T {k_t:.4e}, d {d:.4e}.')
    return Plant(table, hover, k_t, d, mixer)


def prepare_plant(scenario: Scenario) -> Plant:
    """Rotor table, hover point and mixer constants; cached per process on the plant settings."""
    key = scenario.plant_key()
    if key not in _PLANTS:
        _PLANTS[key] = _build_plant(scenario)
    return _PLANTS[key]


@dataclass(eq=False)
class FlightLog:
    dt: float
    t: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray
    rates: np.ndarray
    rpm: np.ndarray
    thrust: np.ndarray
    power: np.ndarray
    # Active waypoint index per sample.
    leg: np.ndarray
    swl: Optional[np.ndarray] = None
    # Sample index at which each waypoint was reached.
    visits: List[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.t)

    def to_frame(self) -> pd.DataFrame:
        swl = self.swl if self.swl is not None else np.full(len(self), np.nan)
        data = np.column_stack([
            self.t, self.position, self.velocity, self.attitude, self.rates, self.rpm, self.thrust, self.power, swl
        ])
        return pd.DataFrame(data, columns=list(TRAJECTORY_COLUMNS))


class _Recorder:

    def __init__(self, n: int):
        self.cols = {name: np.zeros(n) for name in ['t', 'thrust', 'power', 'swl']}
        self.vecs = {name: np.zeros((n, 3)) for name in ['position', 'velocity', 'attitude', 'rates']}
        self.rpm = np.zeros((n, 4))
        self.leg = np.zeros(n, dtype=int)
        self.n = 0

    def add(self, t, state: VehicleState, rpm, thrust, power, swl, leg):
        k = self.n
        self.cols['t'][k] = t
        self.vecs['position'][k] = state.position
        self.vecs['velocity'][k] = state.velocity
        self.vecs['attitude'][k] = state.attitude
        self.vecs['rates'][k] = state.rates
        self.rpm[k] = rpm
        self.cols['thrust'][k] = thrust
        self.cols['power'][k] = power
        self.cols['swl'][k] = swl
        self.leg[k] = leg
        self.n += 1

    def log(self, dt: float, visits: List[int]) -> FlightLog:
        n = self.n
        return FlightLog(dt=dt,
                         t=self.cols['t'][:n].copy(),
                         rpm=self.rpm[:n].copy(),
                         thrust=self.cols['thrust'][:n].copy(),
                         power=self.cols['power'][:n].copy(),
                         swl=self.cols['swl'][:n].copy(),
                         leg=self.leg[:n].copy(),
                         visits=list(visits),
                         **{k: v[:n].copy() for k, v in self.vecs.items()})


@dataclass
class MissionResult:
    log: FlightLog
    breakdown: CostBreakdown
    completed: bool
    aborted: Optional[str]
    mission: Mission
    wall_time: float
    seed: int
    grid: Optional[GroundGrid] = None
    stats: Dict[str, int] = field(default_factory=dict)

    @property
    def J(self) -> float:
        return self.breakdown.total

    def indicators(self) -> Dict[str, float]:
        """Average receiver SPL, source SWL and electrical power."""
        spl = float('nan')
        if self.grid is not None:
            spl = float(np.nanmean(self.grid.mean_spl()))
        return {
            'receiver_spl_db': spl,
            'source_swl_db': float(np.mean(self.log.swl)),
            'power_w': float(np.mean(self.log.power)),
        }


def _turbulent_thrust(gusts: np.ndarray, omega: np.ndarray, scenario: Scenario) -> float:
    r1, r2 = scenario.rotor.hub_radius, scenario.rotor.radius
    total = 0.0
    for i in range(4):
        if omega[i] > 0.0:
            total += thrust_increment(GustSample(*gusts[i]), float(omega[i]), r1, r2, scenario.rho)
    return scenario.dryden.thrust_scale * total


def run_mission(scenario: Scenario,
                gains: GainVector,
                seed: Optional[int] = None,
                probe=None,
                weights: Optional[CostWeights] = None,
                max_time: Optional[float] = None) -> MissionResult:
    """Fly `gains` through the scenario mission and score the flight.

    Flight failures never raise: divergence and early aborts end the rollout and surface
    through `aborted` and the penalty terms. `probe` is called with (t, state) and returns the
    controller override dict for that step.
    """
    start_clock = time.perf_counter()
    seed = scenario.seed if seed is None else seed
    weights = weights or scenario.weights
    plant = prepare_plant(scenario)
    mission = scenario.mission
    if scenario.waypoint_jitter > 0.0:
        mission = jitter_mission(mission, scenario.waypoint_jitter, make_rng(seed, 'jitter'))
    waypoints = mission.points()
    n_wp = mission.n_waypoints
    dt = scenario.dt
    n_max = int(round((max_time or mission.max_time) / dt)) + 1

    gusts = None
    if scenario.turbulence:
        dryden = scenario.dryden.model_copy(update={'seed': seed})
        gusts = DrydenGenerator(dryden, dt).rotor_gusts(n_max)

    grid = None
    if scenario.acoustic_grid:
        directivity = getattr(scenario.emission, 'directivity', None)
        grid = GroundGrid.covering(np.vstack([mission.start, waypoints]),
                                   scenario.emission.centers(),
                                   scenario.grid,
                                   atmosphere=scenario.atmosphere,
                                   directivity=directivity)

    controller = CascadeController(gains, scenario.vehicle, plant.mixer, scenario.limits)
    state = VehicleState(position=np.asarray(mission.start, dtype=float),
                         rotor_speeds=np.full(4, plant.hover_rpm * RPM2RAD))
    stats = KinematicsStats()
    table_before = plant.table.stats.n_clamped
    rec = _Recorder(n_max)
    visits: List[int] = list()
    leg = 0
    start = state.position.copy()
    max_disp = 0.0
    aborted: Optional[str] = None
    i_thrust, i_torque, i_power = FIELDS.index('thrust'), FIELDS.index('torque'), FIELDS.index('power')

    for k in range(n_max):
        t = k * dt
        pos = state.position
        gap = float(np.linalg.norm(pos - waypoints[leg]))
        done = False
        if leg == n_wp - 1:
            if scenario.complete_on_reach and gap <= scenario.termination_threshold:
                visits.append(k)
                done = True
        elif gap <= scenario.target_threshold:
            visits.append(k)
            leg += 1

        setpoint = Setpoint(tuple(waypoints[leg]), mission.yaw, mission.speed_hint(leg))
        overrides = probe(t, state) if probe is not None else None
        cmd = controller.step(state, setpoint, dt, overrides)
        rpm = mix(cmd, plant.mixer)
        omega = rpm * RPM2RAD
        aero = plant.table.lookup(rpm, max(0.0, float(state.velocity[2])))
        turb = 0.0 if gusts is None else _turbulent_thrust(gusts[k], omega, scenario)
        inputs = RotorInputs(aero[:, i_thrust], aero[:, i_torque], omega, turb)
        body = inputs.body_inputs(scenario.vehicle.arm_length)
        src = scenario.emission.source_levels(rpm)
        rec.add(t, state, rpm, body.thrust, float(aero[:, i_power].sum()), broadband(src), leg)
        if grid is not None:
            grid_step(grid, pos, src, k, attitude=state.attitude)

        max_disp = max(max_disp, float(np.linalg.norm(pos - start)))
        if done:
            break
        aborted = early_abort(FlightProgress(t, pos, leg, max_disp), mission, scenario.abort, weights.epsilon)
        if aborted is not None:
            break
        try:
            state.rotor_speeds = omega
            state = rk4_step(state, body, dt, scenario.vehicle, step=k, stats=stats)
        except SimulationDiverged as e:
            logging.debug(f'Rollout diverged: {e}')
            aborted = ABORT_DIVERGED
            break

    log = rec.log(dt, visits)
    breakdown = compute_terms(log, mission, weights, aborted)
    completed = len(visits) >= n_wp
    stats_out = {'n_tilt_clamped': stats.n_tilt_clamped, 'n_table_clamped': plant.table.stats.n_clamped - table_before}
    return MissionResult(log, breakdown, completed, aborted, mission, time.perf_counter() - start_clock, seed, grid,
                         stats_out)
