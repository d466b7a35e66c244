"""Population searchers over a box: random search, GA, PSO and GWO.

Every searcher follows an ask/tell protocol. `ask` returns the next batch of candidates
(one row per candidate), `tell` receives their costs in the same order. A budget can cut the
last batch short, so `tell` may get the costs of a prefix of the batch only. The pure step
functions below are what the searchers delegate to.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import ClassVar, Optional, Tuple

import numpy as np

from quadtune.errors import ConfigurationError
from quadtune.search.space import GaConfig, OptimizerConfig, PsoConfig, SearchSpace

FITNESS_DELTA = 1e-9


def initial_population(space: SearchSpace, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples of the box; the warm start, if any, takes the first slot."""
    population = space.sample(rng, n)
    warm = space.warm_array()
    if warm is not None:
        population[0] = warm
    return population


def pad_costs(costs: np.ndarray, n: int) -> np.ndarray:
    """Costs of an evaluated prefix, extended to `n` entries with +inf."""
    costs = np.asarray(costs, dtype=float)
    if len(costs) > n:
        raise ConfigurationError(f'Got {len(costs)} costs for a batch of {n} candidates.')
    return np.concatenate([costs, np.full(n - len(costs), np.inf)])


class BaseSearcher(ABC):

    name: ClassVar[str]

    def __init__(self, space: SearchSpace, config: OptimizerConfig, rng: np.random.Generator):
        self.space = space
        self.config = config
        self.rng = rng

    @abstractmethod
    def ask(self) -> np.ndarray:
        ...

    @abstractmethod
    def tell(self, candidates: np.ndarray, costs: np.ndarray):
        ...


class RandomSearcher(BaseSearcher):

    name = 'random'

    def __init__(self, space: SearchSpace, config: OptimizerConfig, rng: np.random.Generator, batch: int = 30):
        super().__init__(space, config, rng)
        self.batch = batch
        self._first = True

    def ask(self) -> np.ndarray:
        if self._first:
            self._first = False
            return initial_population(self.space, self.batch, self.rng)
        return self.space.sample(self.rng, self.batch)

    def tell(self, candidates: np.ndarray, costs: np.ndarray):
        pass


# ----------------------------------------------------------------------------------------
# Genetic algorithm.


def selection_probabilities(costs: np.ndarray) -> np.ndarray:
    """Fitness-proportionate selection under minimization, with F = J_worst - J + delta.

    Unevaluated individuals (infinite cost) get no selection weight.
    """
    costs = np.asarray(costs, dtype=float)
    finite = np.isfinite(costs)
    if not finite.any():
        return np.full(costs.size, 1.0 / costs.size)
    fitness = np.where(finite, costs[finite].max() - costs + FITNESS_DELTA, 0.0)
    total = fitness.sum()
    if not np.isfinite(total) or total <= 0.0:
        return np.full(costs.size, 1.0 / costs.size)
    return fitness / total


def elite_indices(costs: np.ndarray, n_elite: int) -> np.ndarray:
    return np.sort(np.argsort(costs, kind='stable')[:n_elite])


def crossover(parent1: np.ndarray, parent2: np.ndarray, lam: float) -> np.ndarray:
    return lam * parent1 + (1.0 - lam) * parent2


def ga_step(population: np.ndarray,
            costs: np.ndarray,
            config: GaConfig,
            rng: np.random.Generator,
            space: SearchSpace,
            generation: int = 0) -> np.ndarray:
    """Next generation. Elites keep their slots; every other slot receives a new child."""
    population = np.asarray(population, dtype=float)
    n, d = population.shape
    if n < 2:
        raise ConfigurationError(f'A GA population needs at least 2 individuals, got {n}.')
    probs = selection_probabilities(costs)
    keep = set(elite_indices(costs, config.n_elite()).tolist())
    sigma = config.mutation_scale * space.width * config.mutation_decay**generation
    nxt = population.copy()
    for i in range(n):
        if i in keep:
            continue
        a, b = rng.choice(n, size=2, p=probs)
        child = population[a]
        if rng.random() < config.crossover_rate:
            child = crossover(population[a], population[b], rng.random())
        mask = rng.random(d) < config.mutation_rate
        child = child + mask * sigma * rng.standard_normal(d)
        nxt[i] = space.clip(child)
    return nxt


class GaSearcher(BaseSearcher):

    name = 'ga'

    def __init__(self, space: SearchSpace, config: OptimizerConfig, rng: np.random.Generator):
        super().__init__(space, config, rng)
        self.population: Optional[np.ndarray] = None
        self.costs: Optional[np.ndarray] = None
        self.generation = 0
        self._pending: Optional[np.ndarray] = None

    def ask(self) -> np.ndarray:
        cfg = self.config.ga
        if self.population is None:
            self.population = initial_population(self.space, cfg.population, self.rng)
            self._pending = np.arange(cfg.population)
        else:
            elites = elite_indices(self.costs, cfg.n_elite())
            self.population = ga_step(self.population, self.costs, cfg, self.rng, self.space, self.generation)
            self._pending = np.setdiff1d(np.arange(cfg.population), elites)
            self.generation += 1
        return self.population[self._pending]

    def tell(self, candidates: np.ndarray, costs: np.ndarray):
        if self.costs is None:
            self.costs = np.full(len(self.population), np.inf)
        self.costs[self._pending] = pad_costs(costs, len(self._pending))


# ----------------------------------------------------------------------------------------
# Particle swarm.


@dataclass
class SwarmState:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray
    best_cost: np.ndarray

    @property
    def global_index(self) -> int:
        return int(np.argmin(self.best_cost))

    @property
    def global_best(self) -> np.ndarray:
        return self.best_position[self.global_index]

    @classmethod
    def start(cls, position: np.ndarray, costs: np.ndarray) -> SwarmState:
        position = np.asarray(position, dtype=float)
        return cls(position=position,
                   velocity=np.zeros_like(position),
                   best_position=position.copy(),
                   best_cost=np.asarray(costs, dtype=float).copy())


def pso_step(state: SwarmState, config: PsoConfig, rng: np.random.Generator, space: SearchSpace) -> SwarmState:
    """Move the swarm: v <- chi v + c1 r1 (p - x) + c2 r2 (g - x), x <- x + v."""
    x = state.position
    r1 = rng.random(x.shape)
    r2 = rng.random(x.shape)
    v = (config.chi * state.velocity + config.c1 * r1 * (state.best_position - x) + config.c2 * r2 *
         (state.global_best - x))
    vmax = config.velocity_clamp * space.width
    v = np.clip(v, -vmax, vmax)
    return replace(state, position=space.clip(x + v), velocity=v)


def pso_update_bests(state: SwarmState, costs: np.ndarray) -> SwarmState:
    costs = np.asarray(costs, dtype=float)
    better = costs < state.best_cost
    best_position = np.where(better[:, None], state.position, state.best_position)
    best_cost = np.where(better, costs, state.best_cost)
    return replace(state, best_position=best_position, best_cost=best_cost)


class PsoSearcher(BaseSearcher):

    name = 'pso'

    def __init__(self, space: SearchSpace, config: OptimizerConfig, rng: np.random.Generator):
        super().__init__(space, config, rng)
        self.state: Optional[SwarmState] = None
        self._first: Optional[np.ndarray] = None

    def ask(self) -> np.ndarray:
        if self.state is None:
            self._first = initial_population(self.space, self.config.pso.swarm, self.rng)
            return self._first
        self.state = pso_step(self.state, self.config.pso, self.rng, self.space)
        return self.state.position

    def tell(self, candidates: np.ndarray, costs: np.ndarray):
        if self.state is None:
            self.state = SwarmState.start(self._first, pad_costs(costs, len(self._first)))
        else:
            self.state = pso_update_bests(self.state, pad_costs(costs, len(self.state.position)))


# ----------------------------------------------------------------------------------------
# Grey wolf optimizer.


def gwo_schedule(t: int, max_iters: int) -> float:
    return 2.0 * (1.0 - min(t, max_iters) / max_iters)


def gwo_leaders(positions: np.ndarray,
                costs: np.ndarray,
                leaders: Optional[np.ndarray] = None,
                leader_costs: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Alpha, beta and delta: the three lowest costs among the pack and the previous leaders.

    Wolves with infinite cost were not evaluated and are never ranked. With fewer than three
    ranked wolves the best one fills the remaining places.
    """
    positions = np.asarray(positions, dtype=float)
    costs = np.asarray(costs, dtype=float)
    if leaders is not None:
        positions = np.concatenate([leaders, positions])
        costs = np.concatenate([leader_costs, costs])
    ranked = np.flatnonzero(np.isfinite(costs))
    if len(ranked) == 0:
        raise ConfigurationError('GWO has no evaluated wolf to lead the pack.')
    order = ranked[np.argsort(costs[ranked], kind='stable')[:3]]
    order = np.concatenate([order, np.repeat(order[:1], 3 - len(order))])
    return positions[order], costs[order]


def gwo_step(positions: np.ndarray,
             costs: np.ndarray,
             t: int,
             max_iters: int,
             rng: np.random.Generator,
             space: SearchSpace,
             leaders: Optional[np.ndarray] = None,
             leader_costs: Optional[np.ndarray] = None) -> np.ndarray:
    positions = np.asarray(positions, dtype=float)
    if len(positions) < 3:
        raise ConfigurationError(f'GWO needs at least 3 wolves, got {len(positions)}.')
    if leaders is None:
        leaders, _ = gwo_leaders(positions, costs)
    a = gwo_schedule(t, max_iters)
    moves = list()
    for leader in leaders:
        r1 = rng.random(positions.shape)
        r2 = rng.random(positions.shape)
        A = 2.0 * a * r1 - a
        C = 2.0 * r2
        D = np.abs(C * leader - positions)
        moves.append(leader - A * D)
    return space.clip(np.mean(moves, axis=0))


class GwoSearcher(BaseSearcher):

    name = 'gwo'

    def __init__(self, space: SearchSpace, config: OptimizerConfig, rng: np.random.Generator, max_iters: int = 100):
        super().__init__(space, config, rng)
        if config.gwo.pack < 3:
            raise ConfigurationError(f'GWO needs at least 3 wolves, got {config.gwo.pack}.')
        self.max_iters = config.gwo.max_iters or max_iters
        self.positions: Optional[np.ndarray] = None
        self.costs: Optional[np.ndarray] = None
        self.leaders: Optional[np.ndarray] = None
        self.leader_costs: Optional[np.ndarray] = None
        self._asked: Optional[np.ndarray] = None
        self.t = 0

    def ask(self) -> np.ndarray:
        if self.positions is None:
            self._asked = initial_population(self.space, self.config.gwo.pack, self.rng)
        else:
            self.t += 1
            self._asked = gwo_step(self.positions, self.costs, self.t, self.max_iters, self.rng, self.space,
                                   self.leaders, self.leader_costs)
        return self._asked

    def tell(self, candidates: np.ndarray, costs: np.ndarray):
        self.positions = self._asked
        self.costs = pad_costs(costs, len(self._asked))
        self.leaders, self.leader_costs = gwo_leaders(self.positions, self.costs, self.leaders, self.leader_costs)
