import math
from collections import deque

import numpy as np
from scipy.optimize import brentq

from quadtune.control.tuning import find_ultimate_gain, measure_oscillation, ziegler_nichols
from quadtune.errors import DomainError
from quadtune.testing import TestCase

DT = 0.002


def lag_delay_response(kp: float, tau1=1.0, tau2=0.5, delay=0.3, t_end=40.0) -> np.ndarray:
    """Unit-step response of P control around 1 / ((1 + tau1 s)(1 + tau2 s)) with dead time."""
    a1 = math.exp(-DT / tau1)
    a2 = math.exp(-DT / tau2) if tau2 > 0.0 else 0.0
    buf = deque([0.0] * int(round(delay / DT)))
    x1 = x2 = 0.0
    n = int(t_end / DT)
    y = np.empty(n)
    for k in range(n):
        out = x2 if tau2 > 0.0 else x1
        y[k] = out
        buf.append(kp * (1.0 - out))
        u = buf.popleft()
        x1 = a1 * x1 + (1.0 - a1) * u
        x2 = a2 * x2 + (1.0 - a2) * x1
    return y


def ultimate_point(tau1=1.0, tau2=0.5, delay=0.3):
    phase = lambda w: math.atan(tau1 * w) + math.atan(tau2 * w) + delay * w - math.pi
    w = brentq(phase, 0.1, 10.0)
    return math.sqrt((1 + (tau1 * w)**2) * (1 + (tau2 * w)**2)), 2 * math.pi / w


class TestZieglerNichols(TestCase):

    def test_recipe(self):
        gains = ziegler_nichols(2.0, 1.0)
        self.assertAlmostEqual(gains.kp, 1.2)
        self.assertAlmostEqual(gains.ki, 2.4)
        self.assertAlmostEqual(gains.kd, 0.15)
        gains = ziegler_nichols(10.0, 0.5)
        self.assertAlmostEqual(gains.kp, 6.0)
        self.assertAlmostEqual(gains.ki, 24.0)
        self.assertAlmostEqual(gains.kd, 0.375)

    def test_invalid(self):
        with self.assertRaises(DomainError):
            ziegler_nichols(0.0, 1.0)
        with self.assertRaises(DomainError):
            ziegler_nichols(1.0, -1.0)


class TestOscillation(TestCase):

    def test_sustained(self):
        t = np.arange(0, 20, 0.01)
        osc = measure_oscillation(1.0 + np.sin(2 * np.pi * t / 2.0), 0.01)
        self.assertAlmostEqual(osc.ratio, 1.0, places=3)
        self.assertAlmostEqual(osc.period, 2.0, places=2)

    def test_decaying(self):
        t = np.arange(0, 20, 0.01)
        osc = measure_oscillation(np.exp(-0.2 * t) * np.cos(2 * np.pi * t), 0.01)
        self.assertAlmostEqual(osc.ratio, math.exp(-0.2), places=2)

    def test_flat_and_monotone(self):
        self.assertEqual(measure_oscillation(np.ones(100), 0.01).ratio, 0.0)
        self.assertEqual(measure_oscillation(1 - np.exp(-np.arange(100) * 0.1), 0.01).ratio, 0.0)

    def test_diverged(self):
        y = np.array([0.0, 1.0, np.nan])
        self.assertEqual(measure_oscillation(y, 0.01).ratio, np.inf)


class TestUltimateGain(TestCase):

    def test_lag_delay_plant(self):
        ku, tu = ultimate_point()
        res = find_ultimate_gain(lag_delay_response, np.linspace(4.0, 7.0, 61), DT)
        self.assertFalse(res.exhausted)
        self.assertLess(abs(res.ku - ku) / ku, 0.05)
        self.assertLess(abs(res.tu - tu) / tu, 0.05)
        trace = res.trace_frame()
        self.assertEqual(list(trace.columns), ['kp', 'ratio'])
        self.assertEqual(trace['kp'].iloc[-1], res.ku)

    def test_refinement(self):
        coarse = find_ultimate_gain(lag_delay_response, np.linspace(4.0, 7.0, 13), DT)
        fine = find_ultimate_gain(lag_delay_response, np.linspace(4.0, 7.0, 61), DT)
        self.assertLessEqual(fine.ku, coarse.ku)

    def test_exhausted(self):
        first_order = lambda kp: lag_delay_response(kp, tau2=0.0, delay=0.0, t_end=10.0)
        grid = np.linspace(0.5, 7.0, 14)
        res = find_ultimate_gain(first_order, grid, DT)
        self.assertTrue(res.exhausted)
        self.assertIsNone(res.ku)
        self.assertEqual(len(res.trace), len(grid))
