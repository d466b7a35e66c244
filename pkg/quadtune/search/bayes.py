"""Lightweight Bayesian optimization: Matern-5/2 GP, expected improvement, pooled argmax."""
from __future__ import annotations

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist, pdist
from scipy.stats import norm, qmc

from quadtune.search.searcher import BaseSearcher
from quadtune.search.space import BoConfig, EvalRecord, OptimizerConfig, SearchSpace

SQRT5 = np.sqrt(5.0)


def matern52(r: np.ndarray, length_scale: float) -> np.ndarray:
    s = SQRT5 * r / length_scale
    return (1.0 + s + s * s / 3.0) * np.exp(-s)


class GaussianProcess:
    """Zero-mean GP on standardized targets. The length scale is the median pairwise distance."""

    def __init__(self, noise: float = 1e-6):
        self.noise = noise
        self.length_scale = 1.0
        self._x: Optional[np.ndarray] = None
        self._chol: Optional[np.ndarray] = None
        self._alpha: Optional[np.ndarray] = None
        self.y_mean = 0.0
        self.y_scale = 1.0

    def fit(self, x: np.ndarray, y: np.ndarray) -> GaussianProcess:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.asarray(y, dtype=float)
        self.y_mean = float(y.mean())
        self.y_scale = float(y.std())
        if not self.y_scale > 0.0:
            raise ValueError('Targets are constant.')
        z = (y - self.y_mean) / self.y_scale
        dists = pdist(x)
        scale = float(np.median(dists)) if dists.size else 1.0
        self.length_scale = scale if scale > 0.0 else 1.0
        k = matern52(cdist(x, x), self.length_scale)
        jitter = self.noise
        for _ in range(4):
            try:
                self._chol = cholesky(k + jitter * np.eye(len(x)), lower=True)
                break
            except LinAlgError:
                jitter *= 100.0
        else:
            raise LinAlgError('Kernel matrix is not positive definite.')
        self._alpha = cho_solve((self._chol, True), z)
        self._x = x
        return self

    def predict(self, xq: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation in the original target units."""
        kq = matern52(cdist(np.atleast_2d(xq), self._x), self.length_scale)
        mu = kq @ self._alpha
        v = solve_triangular(self._chol, kq.T, lower=True)
        var = np.maximum(1.0 - np.sum(v * v, axis=0), 1e-12)
        return self.y_mean + self.y_scale * mu, self.y_scale * np.sqrt(var)


def expected_improvement(mu: np.ndarray, sigma: np.ndarray, best: float, xi: float = 0.0) -> np.ndarray:
    """EI for minimization."""
    gain = best - mu - xi
    z = gain / sigma
    return gain * norm.cdf(z) + sigma * norm.pdf(z)


def seed_design(space: SearchSpace, n: int, rng: np.random.Generator) -> np.ndarray:
    """Latin hypercube over the box, warm start first."""
    sampler = qmc.LatinHypercube(d=space.dim, seed=rng)
    points = space.from_unit(sampler.random(n))
    warm = space.warm_array()
    if warm is not None:
        points = np.vstack([warm[None], points[:n - 1]])
    return points


def candidate_pool(space: SearchSpace, incumbent: np.ndarray, config: BoConfig, rng: np.random.Generator) -> np.ndarray:
    n_local = int(config.pool * config.local_fraction)
    uniform = space.sample(rng, config.pool - n_local)
    scales = np.asarray(config.local_scales)[rng.integers(len(config.local_scales), size=n_local)]
    local = incumbent + scales[:, None] * space.width * rng.standard_normal((n_local, space.dim))
    return np.vstack([uniform, space.clip(local)])


def propose(x: np.ndarray, y: np.ndarray, space: SearchSpace, config: BoConfig, rng: np.random.Generator) -> np.ndarray:
    """Next candidate given evaluated points `x` (rows) and their costs `y`."""
    if len(y) == 0:
        return seed_design(space, 1, rng)[0]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.ptp(y) == 0.0:
        return space.sample(rng, 1)[0]
    keep = np.argsort(y, kind='stable')[:config.max_history]
    x, y = x[keep], y[keep]
    active = space.active
    if not active.any():
        return space.clip(x[0])
    try:
        gp = GaussianProcess(config.noise).fit(space.to_unit(x)[:, active], y)
    except (LinAlgError, ValueError) as e:
        logging.warning(f'GP fit failed ({e}); proposing a random point.')
        return space.sample(rng, 1)[0]
    pool = candidate_pool(space, x[0], config, rng)
    mu, sigma = gp.predict(space.to_unit(pool)[:, active])
    ei = expected_improvement(mu, sigma, float(y[0]), config.xi * gp.y_scale)
    return pool[int(np.argmax(ei))]


def bo_step(history: Sequence[EvalRecord], space: SearchSpace, config: BoConfig,
            rng: np.random.Generator) -> np.ndarray:
    x = np.array([r.gains for r in history], dtype=float).reshape(len(history), space.dim)
    y = np.array([r.J for r in history], dtype=float)
    return propose(x, y, space, config, rng)


class BoSearcher(BaseSearcher):

    name = 'bo'

    def __init__(self, space: SearchSpace, config: OptimizerConfig, rng: np.random.Generator):
        super().__init__(space, config, rng)
        self.x = np.empty((0, space.dim))
        self.y = np.empty(0)

    def ask(self) -> np.ndarray:
        if len(self.y) == 0:
            return seed_design(self.space, self.config.bo.n_init, self.rng)
        return propose(self.x, self.y, self.space, self.config.bo, self.rng)[None]

    def tell(self, candidates: np.ndarray, costs: np.ndarray):
        self.x = np.vstack([self.x, candidates])
        self.y = np.concatenate([self.y, costs])
