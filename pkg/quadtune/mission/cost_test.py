import math

import numpy as np
from pydantic import ValidationError

from quadtune.errors import ConfigurationError
from quadtune.mission.cost import (ABORT_DIVERGED, ABORT_FIRST_WAYPOINT, ABORT_NO_MOVEMENT, TABLE_LABELS, TERMS,
                                   AbortPolicy, CostBreakdown, CostWeights, FlightProgress, calibrate_weights,
                                   compute_terms, early_abort, total_cost)
from quadtune.mission.mission import Mission
from quadtune.mission.simulator import FlightLog
from quadtune.testing import TestCase

MISSION = Mission(waypoints=[(10.0, 0.0, 5.0), (10.0, 10.0, 5.0), (0.0, 10.0, 8.0)])


def make_log(position, attitude=None, thrust=None, power=None, swl=None, leg=None, visits=(), dt=0.1):
    position = np.asarray(position, dtype=float)
    n = len(position)
    return FlightLog(dt=dt,
                     t=np.arange(n) * dt,
                     position=position,
                     velocity=np.zeros((n, 3)),
                     attitude=np.zeros((n, 3)) if attitude is None else np.asarray(attitude, dtype=float),
                     rates=np.zeros((n, 3)),
                     rpm=np.full((n, 4), 2270.0),
                     thrust=np.full(n, 51.0) if thrust is None else np.asarray(thrust, dtype=float),
                     power=np.full(n, 400.0) if power is None else np.asarray(power, dtype=float),
                     leg=np.zeros(n, dtype=int) if leg is None else np.asarray(leg),
                     swl=np.full(n, 80.0) if swl is None else np.asarray(swl, dtype=float),
                     visits=list(visits))


def random_log(rng: np.random.Generator, n: int = 60) -> FlightLog:
    leg = np.sort(rng.integers(0, 3, n))
    visits = sorted(rng.choice(n, size=int(rng.integers(0, 4)), replace=False).tolist())
    return make_log(rng.normal(0.0, 5.0, (n, 3)),
                    attitude=rng.normal(0.0, 0.1, (n, 3)),
                    thrust=rng.uniform(30.0, 70.0, n),
                    power=rng.uniform(200.0, 900.0, n),
                    swl=rng.uniform(60.0, 95.0, n),
                    leg=leg,
                    visits=visits,
                    dt=0.008)


def random_weights(rng: np.random.Generator) -> CostWeights:
    values = {f'w_{name}': float(rng.uniform(0.0, 3.0)) for name in TERMS}
    return CostWeights(gamma_d=float(rng.uniform(0.1, 1.0)),
                       noise_order=float(rng.uniform(1.0, 6.0)),
                       strict_eq15=bool(rng.integers(0, 2)),
                       **values)


class TestComputeTerms(TestCase):

    def test_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            weights = random_weights(rng)
            b = compute_terms(random_log(rng), MISSION, weights)
            expected = math.fsum(list(b.weighted_terms(weights).values()) + [b.c_nm])
            self.assertAlmostEqual(b.total / expected, 1.0, places=12)
            self.assertEqual(b.total, total_cost(b, weights))

    def test_completed(self):
        pos = np.linspace([0.0, 0.0, 0.0], MISSION.waypoints[-1], 40)
        log = make_log(pos, visits=[10, 20, 39])
        b = compute_terms(log, MISSION, CostWeights())
        self.assertEqual(b.c_c, 0.0)
        self.assertEqual(b.c_d, 0.0)
        self.assertAlmostEqual(b.c_t, 3.9)
        self.assertEqual(b.c_nm, 0.0)

    def test_incomplete(self):
        pos = np.linspace([0.0, 0.0, 0.0], [4.0, 0.0, 0.0], 30)
        b = compute_terms(make_log(pos, visits=[5]), MISSION, CostWeights())
        self.assertEqual(b.c_c, 1000.0)
        self.assertAlmostEqual(b.c_t, 2.9)
        gap = np.linalg.norm(np.array([4.0, 0.0, 0.0]) - np.array(MISSION.waypoints[-1]))
        self.assertAlmostEqual(b.c_d, math.sqrt(gap))

    def test_no_movement(self):
        pos = np.zeros((50, 3))
        pos[:, 0] = np.linspace(0.0, 0.049, 50)
        b = compute_terms(make_log(pos), MISSION, CostWeights())
        self.assertEqual(b.c_nm, 1000.0)
        pos[-1, 0] = 0.05
        self.assertEqual(compute_terms(make_log(pos), MISSION, CostWeights()).c_nm, 0.0)

    def test_abort_penalty(self):
        log = make_log(np.linspace([0.0, 0.0, 0.0], [4.0, 0.0, 0.0], 30), visits=[5])
        clean = compute_terms(log, MISSION, CostWeights())
        self.assertEqual(clean.c_ab, 0.0)
        for reason in [ABORT_DIVERGED, ABORT_FIRST_WAYPOINT]:
            b = compute_terms(log, MISSION, CostWeights(), reason)
            self.assertEqual(b.c_ab, 1000.0)
            self.assertAlmostEqual(b.total - clean.total, 1000.0, places=9)
            self.assertEqual(b.total, total_cost(b, CostWeights()))
        self.assertEqual(compute_terms(log, MISSION, CostWeights(p_abort=250.0), ABORT_DIVERGED).c_ab, 250.0)
        still = make_log(np.zeros((50, 3)))
        b = compute_terms(still, MISSION, CostWeights(), ABORT_NO_MOVEMENT)
        self.assertEqual(b.c_ab, 0.0)
        self.assertEqual(b.c_nm, 1000.0)

    def test_constant_logs(self):
        pos = np.linspace([0.0, 0.0, 0.0], [5.0, 0.0, 0.0], 20)
        att = np.tile([0.1, -0.2, 0.3], (20, 1))
        b = compute_terms(make_log(pos, attitude=att), MISSION, CostWeights())
        self.assertEqual(b.c_o, 0.0)
        self.assertEqual(b.c_to, 0.0)

    def test_oscillation_terms(self):
        pos = np.linspace([0.0, 0.0, 0.0], [5.0, 0.0, 0.0], 4)
        att = [[0.0, 0.0, 0.0], [0.1, -0.1, 1.0], [0.0, 0.1, 2.0], [0.2, 0.1, 3.0]]
        b = compute_terms(make_log(pos, attitude=att, thrust=[50.0, 52.0, 49.0, 49.0]), MISSION, CostWeights())
        self.assertAlmostEqual(b.c_o, 0.4 + 0.3)
        self.assertAlmostEqual(b.c_to, 5.0)

    def test_power(self):
        pos = np.linspace([0.0, 0.0, 0.0], [5.0, 0.0, 0.0], 10)
        log = make_log(pos, power=np.full(10, 300.0), dt=0.5)
        self.assertAlmostEqual(compute_terms(log, MISSION, CostWeights()).c_p, 1500.0)
        self.assertAlmostEqual(compute_terms(log, MISSION, CostWeights(energy_mode=False)).c_p, 3000.0)

    def test_noise(self):
        pos = np.linspace([0.0, 0.0, 0.0], [5.0, 0.0, 0.0], 3)
        log = make_log(pos, swl=[85.0, 85.0, 170.0])
        self.assertAlmostEqual(compute_terms(log, MISSION, CostWeights()).c_n, 1.0 + 1.0 + 16.0 + 2.0)
        louder = make_log(pos, swl=[85.0, 90.0, 170.0])
        self.assertGreater(compute_terms(louder, MISSION, CostWeights()).c_n,
                           compute_terms(log, MISSION, CostWeights()).c_n)

    def test_noise_monotone(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            log = random_log(rng)
            base = compute_terms(log, MISSION, CostWeights()).c_n
            log.swl = log.swl + rng.uniform(0.0, 2.0, len(log))
            self.assertGreaterEqual(compute_terms(log, MISSION, CostWeights()).c_n, base)

    def test_missing_swl(self):
        pos = np.linspace([0.0, 0.0, 0.0], [5.0, 0.0, 0.0], 5)
        log = make_log(pos)
        log.swl = None
        with self.assertRaises(ConfigurationError):
            compute_terms(log, MISSION, CostWeights())
        self.assertEqual(compute_terms(log, MISSION, CostWeights(w_n=0.0)).c_n, 0.0)

    def test_empty(self):
        with self.assertRaises(ValueError):
            compute_terms(make_log(np.zeros((0, 3))), MISSION, CostWeights())

    def test_overshoot(self):
        mission = Mission(waypoints=[(10.0, 0.0, 0.0), (10.0, 10.0, 0.0)])
        pos = [[0.0, 0.0, 0.0], [9.0, 0.0, 0.0], [11.5, 0.0, 0.0], [12.0, 1.0, 0.0], [10.5, 5.0, 0.0],
               [10.0, 10.5, 0.0]]
        b = compute_terms(make_log(pos, leg=[0, 0, 1, 1, 1, 1]), mission, CostWeights())
        self.assertAlmostEqual(b.c_os, 2.0 + 0.5)

    def test_permutation(self):
        rng = np.random.default_rng(2)
        log = random_log(rng)
        before = compute_terms(log, MISSION, CostWeights())
        order = rng.permutation(len(log))
        log.position, log.power, log.swl = log.position[order], log.power[order], log.swl[order]
        log.attitude, log.thrust = log.attitude[order], log.thrust[order]
        after = compute_terms(log, MISSION, CostWeights())
        self.assertEqual(after.c_t, before.c_t)
        self.assertAlmostEqual(after.c_p, before.c_p)
        self.assertAlmostEqual(after.c_n, before.c_n)

    def test_concave_distance(self):
        for x in [0.5, 1.0, 7.0]:
            far = make_log([[0.0, 0.0, 0.0], [0.0, 10.0, 8.0 - 2 * x]], visits=[0, 0])
            near = make_log([[0.0, 0.0, 0.0], [0.0, 10.0, 8.0 - x]], visits=[0, 0])
            weights = CostWeights()
            self.assertLess(compute_terms(far, MISSION, weights).c_d, 2 * compute_terms(near, MISSION, weights).c_d)


class TestTotalCost(TestCase):

    def test_zero(self):
        weights = CostWeights(**{f'w_{name}': 0.0 for name in TERMS}, p_c=0.0, p_nm=0.0, p_abort=0.0)
        b = CostBreakdown(c_t=5.0, c_d=1.0, c_o=2.0, c_os=3.0, c_p=9.0, c_n=1.0)
        self.assertEqual(total_cost(b, weights), 0.0)

    def test_unit_weights(self):
        b = CostBreakdown(**{f'c_{name}': float(i + 1) for i, name in enumerate(TERMS)})
        self.assertEqual(total_cost(b, CostWeights()), 36.0)
        self.assertEqual(total_cost(b, CostWeights(strict_eq15=True)), 32.0)

    def test_scaling(self):
        b = CostBreakdown(c_t=60.0, c_d=1.5, c_o=3.0, c_to=40.0, c_c=1000.0, c_os=0.7, c_p=2e4, c_n=900.0, c_nm=1000.0)
        weights = CostWeights(w_p=0.01)
        base = total_cost(b, weights) - b.c_nm
        self.assertAlmostEqual((total_cost(b, weights.scaled(2.5)) - b.c_nm) / base, 2.5, places=12)

    def test_validation(self):
        with self.assertRaises(ValidationError):
            CostWeights(w_t=-1.0)
        with self.assertRaises(ValidationError):
            CostWeights(gamma_d=0.0)
        with self.assertRaises(ValidationError):
            CostWeights(noise_order=0.5)

    def test_table_rows(self):
        b = CostBreakdown(c_t=1.0, total=1.0)
        terms = list(b.to_frame()['term'])
        self.assertEqual(terms[0], 'Total cost')
        self.assertEqual(set(terms), set(TABLE_LABELS.values()))
        self.assertEqual(set(b.to_row(labels=True)), set(TABLE_LABELS.values()))


class TestCalibration(TestCase):

    def setUp(self):
        self.baseline = CostBreakdown(c_t=60.0, c_d=0.8, c_o=4.2, c_to=130.0, c_os=1.7, c_p=5.5e4, c_n=2.1e4)

    def test_ratio(self):
        weights = calibrate_weights(self.baseline)
        self.assertAlmostEqual(weights.w_t, 0.5)
        self.assertEqual(weights.w_c, 1.0)
        self.assertEqual(weights.p_c, 1000.0)

    def test_self_consistent(self):
        weights = calibrate_weights(self.baseline)
        for name, value in self.baseline.weighted_terms(weights).items():
            if name != 'c':
                self.assertAlmostEqual(value, 30.0, delta=1e-9)

    def test_on_target(self):
        baseline = CostBreakdown(**{f'c_{name}': 30.0 for name in TERMS if name != 'c'})
        weights = calibrate_weights(baseline)
        for name in TERMS:
            self.assertAlmostEqual(getattr(weights, f'w_{name}'), 1.0)

    def test_zero_term(self):
        baseline = self.baseline.model_copy(update={'c_os': 0.0})
        with self.assertLogs(level='WARNING') as logs:
            weights = calibrate_weights(baseline)
        self.assertEqual(weights.w_os, 0.0)
        self.assertIn('c_os', logs.output[0])


class TestEarlyAbort(TestCase):

    def setUp(self):
        self.policy = AbortPolicy()

    def progress(self, t, position, leg=0, moved=None):
        position = np.asarray(position, dtype=float)
        moved = float(np.linalg.norm(position)) if moved is None else moved
        return FlightProgress(t, position, leg, moved)

    def test_nominal(self):
        for k in range(200):
            t = 0.1 * k
            x = min(10.0, 0.5 * t)
            self.assertIsNone(early_abort(self.progress(t, [x, 0.0, 5.0 * x / 10.0]), MISSION, self.policy))

    def test_stationary(self):
        self.assertIsNone(early_abort(self.progress(2.9, [0.0, 0.0, 0.01]), MISSION, self.policy))
        self.assertEqual(early_abort(self.progress(3.0, [0.0, 0.0, 0.01]), MISSION, self.policy), ABORT_NO_MOVEMENT)

    def test_diverged(self):
        self.assertEqual(early_abort(self.progress(5.0, [0.0, -100.0, 0.0]), MISSION, self.policy), ABORT_DIVERGED)
        # Measured from the active leg's start.
        self.assertIsNone(early_abort(self.progress(5.0, [10.0, 40.0, 5.0], leg=1), MISSION, self.policy))
        self.assertEqual(early_abort(self.progress(5.0, [10.0, 61.0, 5.0], leg=1), MISSION, self.policy),
                         ABORT_DIVERGED)
        self.assertEqual(early_abort(self.progress(5.0, [np.nan, 0.0, 0.0]), MISSION, self.policy), ABORT_DIVERGED)

    def test_first_waypoint(self):
        self.assertIsNone(early_abort(self.progress(40.0, [3.0, 0.0, 1.0]), MISSION, self.policy))
        self.assertEqual(early_abort(self.progress(40.1, [3.0, 0.0, 1.0]), MISSION, self.policy), ABORT_FIRST_WAYPOINT)
        self.assertIsNone(early_abort(self.progress(60.0, [10.0, 3.0, 5.0], leg=1), MISSION, self.policy))

    def test_disabled(self):
        policy = AbortPolicy(enabled=False)
        self.assertIsNone(early_abort(self.progress(10.0, [0.0, 0.0, 0.0]), MISSION, policy))
