"""Tests for safety and efficiency metrics."""

import math
import os
import sys
import unittest
from dataclasses import replace

# Add the parent directory to the path to import from icrwsim
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from icrwsim.engine import SimulationResult
from icrwsim.metrics import collisions_per_hour, mean_and_half_width, mean_pace, time_improvement_per_km
from icrwsim.mobility import CollisionEvent, TripSample
from icrwsim.scenario import BehaviorMode, ScenarioConfig


def result_with(trips=(), collisions=0, mode=BehaviorMode.ICRW, duration=1800.0, include_truncated=False):
    config = replace(ScenarioConfig(), behavior_mode=mode, sim_duration=duration,
                     include_truncated=include_truncated)
    events = [CollisionEvent(float(i), 4, (i, i + 1)) for i in range(collisions)]
    return SimulationResult(config=config, collisions=events, trips=list(trips))


class TestMetrics(unittest.TestCase):
    """Tests for per-run metrics."""

    def test_collisions_per_hour(self):
        self.assertEqual(collisions_per_hour(result_with(collisions=3)), 6.0)
        self.assertEqual(collisions_per_hour(result_with(duration=3600.0)), 0.0)

    def test_mean_pace_skips_truncated_trips(self):
        trips = [TripSample(1, 0.0, 1000.0, 100.0), TripSample(2, 0.0, 2000.0, 300.0),
                 TripSample(3, 0.0, 500.0, 500.0, truncated=True)]
        self.assertEqual(mean_pace(trips), 125.0)
        self.assertAlmostEqual(mean_pace(trips, include_truncated=True), (100.0 + 150.0 + 1000.0) / 3)

    def test_mean_pace_without_trips(self):
        self.assertTrue(math.isnan(mean_pace([])))
        self.assertTrue(math.isnan(mean_pace([TripSample(1, 0.0, 0.0, 10.0)])))

    def test_time_improvement_against_careful_baseline(self):
        baseline = result_with([TripSample(1, 0.0, 1000.0, 150.0)], mode=BehaviorMode.CAREFUL)
        faster = result_with([TripSample(1, 0.0, 1000.0, 120.0)])
        self.assertEqual(time_improvement_per_km(faster, baseline), 30.0)
        self.assertEqual(time_improvement_per_km(baseline, baseline), 0.0)

    def test_time_improvement_honors_truncation_setting(self):
        baseline = result_with([TripSample(1, 0.0, 1000.0, 150.0)], mode=BehaviorMode.CAREFUL)
        trips = [TripSample(1, 0.0, 1000.0, 120.0), TripSample(2, 0.0, 1000.0, 60.0, truncated=True)]
        self.assertEqual(time_improvement_per_km(result_with(trips), baseline), 30.0)
        self.assertEqual(time_improvement_per_km(result_with(trips, include_truncated=True), baseline), 60.0)

    def test_baseline_must_be_careful(self):
        with self.assertRaises(ValueError):
            time_improvement_per_km(result_with(), result_with(mode=BehaviorMode.NOAPP))


class TestConfidenceInterval(unittest.TestCase):
    """Tests for seed aggregation."""

    def test_single_value_has_no_interval(self):
        mean, half = mean_and_half_width([4.0])
        self.assertEqual(mean, 4.0)
        self.assertTrue(math.isnan(half))

    def test_student_t_half_width(self):
        mean, half = mean_and_half_width([1.0, 2.0, 3.0])
        self.assertEqual(mean, 2.0)
        # t(0.975, 2) = 4.3027, sd = 1
        self.assertAlmostEqual(half, 4.302652729911275 / math.sqrt(3), places=6)

    def test_nan_values_are_ignored(self):
        mean, _ = mean_and_half_width([1.0, math.nan, 3.0])
        self.assertEqual(mean, 2.0)
        self.assertTrue(all(math.isnan(v) for v in mean_and_half_width([])))


if __name__ == '__main__':
    unittest.main()
