import tempfile
from pathlib import Path
from unittest.mock import patch

import numpy as np

from quadtune.aero.bemt import RotorGeometry, bemt_solve, find_hover_omega
from quadtune.aero.surrogate import (FIELDS, SurrogateTable, build_surrogate, fit_drag_factor, fit_thrust_constant,
                                     smape, surrogate_eval, surrogate_hover_omega, validate_surrogate)
from quadtune.errors import ConvergenceError, DomainError, SurrogateBuildError
from quadtune.testing import TestCase


class TestSurrogateSmall(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.geom = RotorGeometry()
        cls.omega_grid = np.linspace(0.0, 4000.0, 9)
        cls.v_grid = np.linspace(0.0, 8.0, 5)
        cls.table = build_surrogate(cls.geom, cls.omega_grid, cls.v_grid)

    def test_single_cell(self):
        table = build_surrogate(self.geom, [0.0], [1.0])
        self.assertEqual(table.shape, (1, 1))
        self.assertEqual(table['thrust'][0, 0], 0.0)
        self.assertEqual(surrogate_eval(table, 0.0, 1.0).thrust, 0.0)

    def test_cells_match_solver(self):
        for i in [0, 3, 8]:
            for j in [0, 2, 4]:
                perf = bemt_solve(self.geom, self.omega_grid[i], self.v_grid[j])
                self.assertEqual(tuple(self.table.values[:, i, j]), perf.as_tuple())

    def test_exact_on_nodes(self):
        for i, j in [(1, 1), (4, 0), (8, 4), (6, 3)]:
            perf = surrogate_eval(self.table, self.omega_grid[i], self.v_grid[j])
            self.assertArrayAlmostEqual(perf.as_tuple(), self.table.values[:, i, j], rtol=1e-12, atol=1e-12)

    def test_midpoint_is_mean(self):
        omega = 0.5 * (self.omega_grid[4] + self.omega_grid[5])
        v = 0.5 * (self.v_grid[1] + self.v_grid[2])
        perf = surrogate_eval(self.table, omega, v)
        mean = self.table.values[:, 4:6, 1:3].mean(axis=(1, 2))
        self.assertArrayAlmostEqual(perf.as_tuple(), mean, rtol=1e-12, atol=1e-15)

    def test_clamping(self):
        table = SurrogateTable(self.table.omega_grid, self.table.v_grid, self.table.values)
        inside = surrogate_eval(table, 4000.0, 8.0)
        outside = surrogate_eval(table, 5000.0, 12.0)
        self.assertEqual(inside, outside)
        self.assertEqual(table.stats.n_eval, 2)
        self.assertEqual(table.stats.n_clamped, 1)

    def test_vectorized_lookup(self):
        rows = self.table.lookup([1000.0, 2000.0], 2.0)
        self.assertEqual(rows.shape, (2, len(FIELDS)))
        self.assertArrayAlmostEqual(rows[1], surrogate_eval(self.table, 2000.0, 2.0).as_tuple())

    def test_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'table.json'
            self.table.save(path)
            loaded = SurrogateTable.load(path)
        self.assertArrayEqual(loaded.values, self.table.values)
        self.assertArrayEqual(loaded.omega_grid, self.table.omega_grid)

    def test_invalid_grids(self):
        with self.assertRaises(DomainError):
            build_surrogate(self.geom, [0.0, 0.0], [1.0])
        with self.assertRaises(DomainError):
            build_surrogate(self.geom, [], [1.0])
        with self.assertRaises(DomainError):
            SurrogateTable([0.0, 1.0], [0.0], np.zeros([6, 3, 1]))

    def test_build_error_carries_cell(self):
        calls = {'n': 0}

        def flaky(geom, omega, v, rho):
            calls['n'] += 1
            if calls['n'] == 4:
                raise ConvergenceError(1e-3, 500, omega, v)
            return bemt_solve(geom, omega, v, rho)

        with patch('quadtune.aero.surrogate.bemt_solve', side_effect=flaky):
            with self.assertRaises(SurrogateBuildError) as cm:
                build_surrogate(self.geom, [1000.0, 2000.0], [0.0, 1.0, 2.0])
        self.assertEqual(cm.exception.cell, (1, 0))
        self.assertIsInstance(cm.exception, ConvergenceError)

    def test_fitted_constants(self):
        table = build_surrogate(self.geom, np.linspace(0.0, 4000.0, 81), [0.0, 1.0])
        target = 5.2 * 9.81 / 4
        hover = surrogate_hover_omega(table, target)
        self.assertAlmostEqual(hover, find_hover_omega(self.geom, target), delta=20.0)
        k_t = fit_thrust_constant(table, hover)
        d = fit_drag_factor(table, hover)
        w = hover * 2.0 * np.pi / 60.0
        self.assertAlmostEqual(k_t * w**2, target, delta=0.02 * target)
        self.assertGreater(d, 0.0)
        self.assertLess(d, k_t)


class TestSmape(TestCase):

    def test_basic(self):
        self.assertEqual(smape(np.array([0.0, 1.0]), np.array([0.0, 1.0])), 0.0)
        self.assertAlmostEqual(smape(np.array([1.0]), np.array([3.0])), 100.0)


class TestSurrogateAccuracy(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.geom = RotorGeometry()
        cls.table = build_surrogate(cls.geom, np.linspace(0.0, 4000.0, 100), np.linspace(1.0, 20.0, 80))

    def test_size(self):
        self.assertEqual(self.table.values[0].size, 8000)

    def test_smape(self):
        report = validate_surrogate(self.table, self.geom, n=1000, rng=np.random.default_rng(1))
        errors = report.errors.set_index('quantity')['smape']
        for name in ['thrust', 'torque', 'power']:
            self.assertLess(errors[name], 6.0, msg=name)
        self.assertGreater(report.solver_seconds, 0.0)
