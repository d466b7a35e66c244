import math

import numpy as np

from quadtune.acoustics.bands import ThirdOctaveSpectrum, broadband, third_octave_centers
from quadtune.acoustics.emission import DirectivityPattern, directivity_index
from quadtune.acoustics.grid import GridConfig, GroundGrid, down_axis, grid_step
from quadtune.acoustics.propagation import AtmosphereConditions, received_spl
from quadtune.testing import TestCase

CENTERS = third_octave_centers()
SOURCE = np.linspace(75.0, 60.0, 31)


class TestGridStep(TestCase):

    def test_overhead(self):
        grid = GroundGrid([0.0], [0.0], CENTERS, GridConfig(n=1))
        out = grid_step(grid, (0.0, 0.0, 10.0), SOURCE, 0)
        expected = broadband(received_spl(ThirdOctaveSpectrum(CENTERS, SOURCE), 10.0, AtmosphereConditions()))
        self.assertAlmostEqual(float(out[0, 0]), expected)
        self.assertAlmostEqual(float(grid.history[0][0, 0]), expected, places=4)

    def test_culling(self):
        grid = GroundGrid([0.0, 14.001], [0.0, 50.0], CENTERS, GridConfig(n=2, radius=14.0, floor=30.0))
        out = grid_step(grid, (0.0, 0.0, 5.0), SOURCE, 0)
        self.assertEqual(out[1, 0], 30.0)
        self.assertGreater(out[0, 0], 30.0)
        self.assertArrayEqual(grid.active[0], [[True, False], [False, False]])

    def test_min_distance(self):
        grid = GroundGrid([0.0], [0.0], CENTERS, GridConfig(n=1, min_distance=1.0))
        on_ground = grid_step(grid, (0.0, 0.0, 0.0), SOURCE, 0)
        at_one = grid_step(grid, (0.0, 0.0, 1.0), SOURCE, 1)
        self.assertAlmostEqual(float(on_ground[0, 0]), float(at_one[0, 0]))

    def test_rotor_rows(self):
        grid = GroundGrid([0.0], [0.0], CENTERS, GridConfig(n=1))
        a = grid_step(grid, (0.0, 0.0, 10.0), np.stack([SOURCE - 6.0] * 4), 0)
        b = grid_step(grid, (0.0, 0.0, 10.0), SOURCE + 10 * math.log10(4.0) - 6.0, 1)
        self.assertAlmostEqual(float(a[0, 0]), float(b[0, 0]))

    def test_culling_equivalence(self):
        pattern = DirectivityPattern()
        rng = np.random.default_rng(3)
        culled = GroundGrid.covering([[0.0, 0.0], [30.0, 30.0]], CENTERS, GridConfig(n=8), directivity=pattern)
        full = GroundGrid.covering([[0.0, 0.0], [30.0, 30.0]],
                                   CENTERS,
                                   GridConfig(n=8, radius=math.inf),
                                   directivity=pattern)
        for t in range(20):
            pos = np.array([rng.uniform(0, 30), rng.uniform(0, 30), rng.uniform(2, 20)])
            att = rng.uniform(-0.3, 0.3, 3)
            a = grid_step(culled, pos, SOURCE, t, attitude=att)
            b = grid_step(full, pos, SOURCE, t, attitude=att)
            xx, yy = np.meshgrid(culled.x, culled.y, indexing='ij')
            near = np.hypot(xx - pos[0], yy - pos[1]) <= 14.0
            self.assertArrayAlmostEqual(a[near], b[near], rtol=1e-12)
            self.assertTrue(np.all(a[~near] == 30.0))
            self.assertTrue(np.all(full.active[t]))

    def test_brute_force(self):
        pattern = DirectivityPattern()
        cond = AtmosphereConditions()
        grid = GroundGrid.covering([[0.0, 0.0]], CENTERS, GridConfig(n=5, radius=math.inf, margin=10.0),
                                   directivity=pattern)
        pos = np.array([1.5, -2.0, 8.0])
        att = np.array([0.1, -0.05, 0.4])
        out = grid_step(grid, pos, SOURCE, 0, attitude=att)
        axis = down_axis(att)
        for i, x in enumerate(grid.x):
            for j, y in enumerate(grid.y):
                ray = np.array([x, y, 0.0]) - pos
                d = float(np.linalg.norm(ray))
                zeta = math.acos(float(ray @ axis) / d)
                di = directivity_index(CENTERS, zeta, pattern)
                expected = broadband(received_spl(ThirdOctaveSpectrum(CENTERS, SOURCE), d, cond, di=di))
                self.assertAlmostEqual(float(out[i, j]), expected, places=9)


class TestGroundGrid(TestCase):

    def test_covering(self):
        grid = GroundGrid.covering([[0.0, 0.0, 1.0], [20.0, 10.0, 5.0]], CENTERS, GridConfig(n=4, margin=5.0))
        self.assertAlmostEqual(grid.x[0], -5.0 + 30.0 / 8)
        self.assertAlmostEqual(grid.x[-1], 25.0 - 30.0 / 8)
        self.assertAlmostEqual(grid.y[0] + grid.y[-1], 10.0)
        self.assertAlmostEqual(grid.y[1] - grid.y[0], 7.5)

    def test_history(self):
        grid = GroundGrid([0.0, 100.0], [0.0, 100.0], CENTERS, GridConfig(n=2))
        grid_step(grid, (0.0, 0.0, 10.0), SOURCE, 0)
        grid_step(grid, (0.0, 0.0, 20.0), SOURCE, 3)
        self.assertEqual(grid.n_steps, 4)
        self.assertArrayEqual(grid.history[1], np.full((2, 2), 30.0))
        mean = grid.mean_spl()
        self.assertTrue(np.isnan(mean[1]))
        self.assertAlmostEqual(mean[0], float(grid.history[0][0, 0]))
        self.assertGreater(mean[0], mean[3])

    def test_exports(self):
        grid = GroundGrid([0.0, 100.0], [0.0, 100.0], CENTERS, GridConfig(n=2))
        for t in range(4):
            grid_step(grid, (0.0, 0.0, 10.0 + t), SOURCE, t)
        frame = grid.to_frame()
        self.assertEqual(list(frame.columns), ['t_index', 'cell_i', 'cell_j', 'spl_db'])
        self.assertEqual(len(frame), 4)
        self.assertEqual(len(grid.to_frame(stride=2, active_only=False)), 8)
        summary = grid.summary()
        self.assertEqual(summary['n_steps'], 4)
        self.assertAlmostEqual(summary['max_db'][0][0], float(grid.history[0][0, 0]), places=4)
        self.assertEqual(summary['mean_db'][1][1], 30.0)
