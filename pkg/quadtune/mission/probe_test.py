import math
from unittest.mock import patch

import numpy as np

from quadtune.control.gains import REFERENCE_GAINS
from quadtune.control.tuning import UltimateGainResult, ziegler_nichols
from quadtune.mission.mission import Mission
from quadtune.mission.probe import (PROBE_ALTITUDE, TUNING_ORDER, default_kp_grid, loop_response, probe_loop,
                                    probe_scenario, tune_baseline)
from quadtune.mission.simulator import AeroGrid, Scenario
from quadtune.testing import TestCase

SCENARIO = Scenario(mission=Mission(waypoints=[(20.0, 0.0, 10.0)]),
                    aero=AeroGrid(n_omega=41, n_v=6, v_max=10.0),
                    turbulence=True,
                    acoustic_grid=True)


def growing_sine(scenario, gains, loop, kp, duration=20.0):
    """Unit-period oscillation whose amplitude ratio per period is exp(0.2 * (kp - 2))."""
    t = np.arange(int(round(duration / scenario.dt)) + 1) * scenario.dt
    return 10.0 + np.exp(0.2 * (kp - 2.0) * t) * np.sin(2.0 * math.pi * t)


class TestProbeScenario(TestCase):

    def test_alt(self):
        probe = probe_scenario(SCENARIO, 'alt', duration=12.0)
        self.assertEqual(probe.mission.start, (0.0, 0.0, PROBE_ALTITUDE))
        self.assertEqual(probe.mission.waypoints, [(0.0, 0.0, PROBE_ALTITUDE + 1.0)])
        self.assertEqual(probe.mission.max_time, 12.0)
        self.assertFalse(probe.turbulence)
        self.assertFalse(probe.acoustic_grid)
        self.assertFalse(probe.abort.enabled)
        self.assertFalse(probe.complete_on_reach)
        self.assertTrue(SCENARIO.complete_on_reach)
        self.assertTrue(SCENARIO.abort.enabled)

    def test_override_loops_hold_position(self):
        for loop in ['att', 'vel_xy', 'vel_z']:
            probe = probe_scenario(SCENARIO, loop)
            self.assertEqual(probe.mission.waypoints, [probe.mission.start])
            self.assertFalse(probe.complete_on_reach)

    def test_grid(self):
        grid = default_kp_grid(2.0)
        self.assertAlmostEqual(grid[0], 0.2)
        self.assertGreaterEqual(grid[-1], 100.0)
        self.assertArrayAlmostEqual(grid[1:] / grid[:-1], np.full(grid.size - 1, 1.04))


class TestProbeLoop(TestCase):

    def test_response(self):
        y = loop_response(SCENARIO, REFERENCE_GAINS, 'att', 0.5, duration=2.0)
        self.assertEqual(y.shape, (251, ))
        self.assertEqual(y[0], 0.0)
        self.assertGreater(y.max(), 0.0)

    def test_full_duration(self):
        for loop in ['att', 'vel_xy', 'vel_z']:
            y = loop_response(SCENARIO, REFERENCE_GAINS, loop, 1.0, duration=1.0)
            self.assertEqual(y.shape, (126, ), loop)
            self.assertEqual(y[0], 0.0, loop)

    @patch('quadtune.mission.probe.loop_response', growing_sine)
    def test_grid_search(self):
        result = probe_loop(SCENARIO, 'att', kp_grid=np.linspace(1.0, 3.0, 41))
        self.assertFalse(result.exhausted)
        self.assertGreater(result.ku, 1.7)
        self.assertLess(result.ku, 1.8)
        self.assertAlmostEqual(result.tu, 1.0, places=2)

    @patch('quadtune.mission.probe.loop_response', growing_sine)
    def test_refine(self):
        result = probe_loop(SCENARIO, 'att', kp_grid=[1.0, 3.0])
        self.assertFalse(result.exhausted)
        self.assertAlmostEqual(result.ku, 1.0 + 2.0 * 5 / 12)
        self.assertEqual(len(result.trace), 2 + 5)

    @patch('quadtune.mission.probe.loop_response', growing_sine)
    def test_exhausted(self):
        result = probe_loop(SCENARIO, 'att', kp_grid=[0.5, 1.0, 1.5])
        self.assertTrue(result.exhausted)
        self.assertEqual(len(result.trace), 3)

    def test_unknown(self):
        with self.assertRaises(KeyError):
            probe_loop(SCENARIO, 'yaw')


class TestTuneBaseline(TestCase):

    def test_order_and_fallback(self):
        seen = list()

        def fake(scenario, loop, gains, duration=20.0):
            seen.append((loop, gains))
            if loop == 'alt':
                return UltimateGainResult(None, None, True)
            return UltimateGainResult(4.0, 2.0, False)

        with patch('quadtune.mission.probe.probe_loop', side_effect=fake):
            gains, results = tune_baseline(SCENARIO)
        self.assertEqual([loop for loop, _ in seen], list(TUNING_ORDER))
        self.assertEqual(set(results), set(TUNING_ORDER))
        zn = ziegler_nichols(4.0, 2.0)
        self.assertEqual(gains.att, zn)
        self.assertEqual(gains.pos_xy, zn)
        self.assertEqual(gains.alt, REFERENCE_GAINS.alt)
        # Outer loops are probed on the inner loops tuned so far.
        self.assertEqual(seen[-1][1].vel_xy, zn)
        self.assertEqual(seen[0][1], REFERENCE_GAINS)
