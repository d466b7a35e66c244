import numpy as np

from quadtune.search.bayes import (BoSearcher, GaussianProcess, bo_step, expected_improvement, matern52, propose,
                                   seed_design)
from quadtune.search.space import BoConfig, EvalRecord, OptimizerConfig, SearchSpace
from quadtune.testing import TestCase

SMALL_POOL = BoConfig(pool=512)


class TestGaussianProcess(TestCase):

    def test_kernel(self):
        r = np.linspace(0.0, 3.0, 31)
        k = matern52(r, 1.0)
        self.assertEqual(k[0], 1.0)
        self.assertTrue(np.all(np.diff(k) < 0.0))

    def test_interpolates(self):
        x = np.linspace(0.0, 1.0, 9)[:, None]
        y = np.sin(6.0 * x[:, 0])
        gp = GaussianProcess().fit(x, y)
        mu, sigma = gp.predict(x)
        self.assertArrayAlmostEqual(mu, y, atol=1e-3)
        self.assertTrue(np.all(sigma < 1e-2))
        _, far = gp.predict(np.array([[3.0]]))
        self.assertGreater(far[0], 0.5 * y.std())

    def test_expected_improvement(self):
        sigma = np.ones(3)
        ei = expected_improvement(np.array([-1.0, 0.0, 1.0]), sigma, best=0.0)
        self.assertTrue(np.all(ei > 0.0))
        self.assertTrue(np.all(np.diff(ei) < 0.0))
        self.assertAlmostEqual(ei[1], 1.0 / np.sqrt(2.0 * np.pi))


class TestProposal(TestCase):

    def setUp(self):
        self.space = SearchSpace.sphere(1)
        self.x = np.linspace(-5.0, 5.0, 8)[:, None]
        self.y = self.x[:, 0]**2

    def test_empty(self):
        space = SearchSpace.sphere(3, warm_start=[1.0, 2.0, 3.0])
        self.assertArrayEqual(bo_step([], space, SMALL_POOL, np.random.default_rng(0)), [1.0, 2.0, 3.0])
        x = bo_step([], SearchSpace.sphere(3), SMALL_POOL, np.random.default_rng(0))
        self.assertTrue(SearchSpace.sphere(3).contains(x))

    def test_degenerate(self):
        x = propose(self.x, np.ones(8), self.space, SMALL_POOL, np.random.default_rng(3))
        self.assertTrue(self.space.contains(x))

    def test_deterministic(self):
        a = propose(self.x, self.y, self.space, SMALL_POOL, np.random.default_rng(7))
        b = propose(self.x, self.y, self.space, SMALL_POOL, np.random.default_rng(7))
        self.assertArrayEqual(a, b)

    def test_basin(self):
        proposals = [propose(self.x, self.y, self.space, SMALL_POOL, np.random.default_rng(i))[0] for i in range(100)]
        self.assertLess(np.mean(np.abs(proposals)), 2.5)

    def test_records(self):
        history = [EvalRecord(gains=[float(x)], J=float(x * x)) for x in self.x[:, 0]]
        a = bo_step(history, self.space, SMALL_POOL, np.random.default_rng(1))
        b = propose(self.x, self.y, self.space, SMALL_POOL, np.random.default_rng(1))
        self.assertArrayEqual(a, b)


class TestBoSearcher(TestCase):

    def test_seed_design(self):
        space = SearchSpace.sphere(2, warm_start=[0.5, -0.5])
        points = seed_design(space, 16, np.random.default_rng(0))
        self.assertEqual(points.shape, (16, 2))
        self.assertArrayEqual(points[0], [0.5, -0.5])
        self.assertTrue(all(space.contains(p) for p in points))

    def test_ask_tell(self):
        space = SearchSpace.sphere(2)
        searcher = BoSearcher(space, OptimizerConfig(bo=BoConfig(n_init=6, pool=256)), np.random.default_rng(0))
        first = searcher.ask()
        self.assertEqual(first.shape, (6, 2))
        searcher.tell(first, np.sum(first**2, axis=1))
        nxt = searcher.ask()
        self.assertEqual(nxt.shape, (1, 2))
        self.assertTrue(space.contains(nxt[0]))
