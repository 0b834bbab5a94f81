"""Tests for the simulation loop and parameter sweeps."""

import os
import sys
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

# Add the parent directory to the path to import from icrwsim
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from icrwsim.channel.models import Ideal, parse_channel
from icrwsim.engine import NOAPP_LABEL, Simulation, baseline_config, cell_config, run, sweep
from icrwsim.metrics import time_improvement_per_km
from icrwsim.output import PACKETS_FILE, RESULT_FILE, TRIPS_FILE, write_result
from icrwsim.scenario import BehaviorMode, ScenarioConfig
from icrwsim.validator import ValidationError

SMALL = {
    "grid.blocks_x": 2,
    "grid.blocks_y": 2,
    "vehicle_count": 8,
    "sim_duration": 60.0,
}


def small_config(**flat):
    return ScenarioConfig.from_flat({**SMALL, **flat})


class TestSimulation(unittest.TestCase):
    """Tests for single runs."""

    def test_careful_drivers_never_collide(self):
        for seed in (1, 2):
            with self.subTest(seed=seed):
                result = run(small_config(behavior_mode="careful", rng_seed=seed))
                self.assertEqual(result.collisions, [])
                self.assertEqual(result.packets_sent, 0)

    def test_fleet_size_is_constant(self):
        simulation = Simulation(small_config(behavior_mode="noapp", vehicle_count=12, sim_duration=120.0))
        simulation.run()
        self.assertEqual(len(simulation.traffic.vehicles), 12)
        self.assertGreaterEqual(simulation.traffic.next_id, 12)

    def test_messaging_only_with_the_application(self):
        noapp = run(small_config(behavior_mode="noapp", sim_duration=5.0))
        icrw = run(small_config(behavior_mode="icrw", sim_duration=5.0))
        self.assertEqual(noapp.packets_sent, 0)
        # every vehicle broadcasts each 0.1 s to the 7 others
        self.assertEqual(icrw.packets_sent, 50 * 8 * 7)
        self.assertEqual(icrw.packets_delivered, icrw.packets_sent)

    def test_invalid_config_is_rejected(self):
        with self.assertRaises(ValidationError):
            run(replace(small_config(), vehicle_count=1))

    def test_same_seed_same_outcome(self):
        config = small_config(behavior_mode="icrw", **{"channel.kind": "emu", "output.packet_log": True},
                              sim_duration=10.0)
        first, second = run(config), run(config)
        self.assertEqual(first.collisions, second.collisions)
        self.assertEqual(first.trips, second.trips)
        self.assertEqual([(p.tx, p.rx, p.delivered) for p in first.packet_log],
                         [(p.tx, p.rx, p.delivered) for p in second.packet_log])

        with tempfile.TemporaryDirectory() as tmp:
            a, b = Path(tmp) / "a", Path(tmp) / "b"
            write_result(a, first, timestamp=False)
            write_result(b, second, timestamp=False)
            for name in (RESULT_FILE, TRIPS_FILE, PACKETS_FILE):
                self.assertEqual((a / name).read_bytes(), (b / name).read_bytes(), name)

    def test_progress_callback(self):
        calls = []
        run(small_config(behavior_mode="careful", sim_duration=1.0), lambda k, n: calls.append((k, n)))
        self.assertEqual(calls[0], (1, 10))
        self.assertEqual(calls[-1], (10, 10))

    def test_emulated_channel_changes_risk_outcomes(self):
        flat = {"grid.blocks_x": 3, "grid.blocks_y": 3, "vehicle_count": 16, "sim_duration": 120.0,
                "alarm_threshold": 3.0}
        ideal = run(ScenarioConfig.from_flat(flat))
        emulated = run(ScenarioConfig.from_flat({**flat, "channel.kind": "emu", "channel.packet_bytes": 500}))
        self.assertEqual(ideal.packets_delivered, ideal.packets_sent)
        self.assertLess(emulated.packets_delivered, emulated.packets_sent)

        def timeline(result):
            return [(e["time"], e["type"], e.get("vehicle")) for e in result.events]

        self.assertGreater(ideal.warnings + ideal.alarms, 0)
        self.assertNotEqual(timeline(emulated), timeline(ideal))


class TestSweepConfigs(unittest.TestCase):
    """Tests for the configurations derived for baselines and sweep cells."""

    def test_baseline_is_careful(self):
        config = baseline_config(small_config(behavior_mode="noapp", rng_seed=4))
        self.assertIs(config.behavior_mode, BehaviorMode.CAREFUL)
        self.assertEqual(config.rng_seed, 4)

    def test_noapp_cell(self):
        config = cell_config(small_config(), NOAPP_LABEL, 1.5, 3)
        self.assertIs(config.behavior_mode, BehaviorMode.NOAPP)
        self.assertEqual(config.channel, Ideal())
        self.assertEqual(config.rng_seed, 3)

    def test_channel_cell_sets_thresholds(self):
        config = cell_config(small_config(), "per:0.3", 1.5, 3)
        self.assertIs(config.behavior_mode, BehaviorMode.ICRW)
        self.assertEqual(config.alarm_threshold, 1.5)
        self.assertEqual(config.warning_threshold, 3.0)


class TestSweep(unittest.TestCase):
    """Tests for sweeps over thresholds, channels and seeds."""

    def setUp(self):
        self.base = small_config(sim_duration=10.0)

    def test_rows_in_cell_order(self):
        rows = sweep(self.base, [0.5, 1.0], ["ideal", NOAPP_LABEL], [1, 2])
        self.assertEqual([(r.channel, r.alarm_threshold) for r in rows],
                         [("ideal", 0.5), (NOAPP_LABEL, 0.5), ("ideal", 1.0), (NOAPP_LABEL, 1.0)])
        self.assertTrue(all(r.summary.seeds == 2 for r in rows))
        self.assertEqual(rows[0].delivery_ratio, 1.0)

    def test_noapp_cells_share_runs(self):
        calls = []
        rows = sweep(self.base, [0.5, 1.0], [NOAPP_LABEL], [1], progress=lambda k, n: calls.append(n))
        # one baseline plus one distracted run
        self.assertEqual(calls[-1], 2)
        self.assertEqual(repr(rows[0].summary), repr(rows[1].summary))

    def test_parallel_matches_serial(self):
        serial = sweep(self.base, [1.0], ["ideal", "per:0.5"], [1, 2])
        parallel = sweep(self.base, [1.0], ["ideal", "per:0.5"], [1, 2], workers=2)
        self.assertEqual([repr(r) for r in serial], [repr(r) for r in parallel])

    def test_empty_axis(self):
        with self.assertRaises(ValueError):
            sweep(self.base, [], ["ideal"], [1])
        with self.assertRaises(ValueError):
            sweep(self.base, [1.0], [], [1])
        with self.assertRaises(ValueError):
            sweep(self.base, [1.0], ["ideal"], [])

    def test_bad_channel_label(self):
        with self.assertRaises(ValueError):
            sweep(self.base, [1.0], ["carrier-pigeon"], [1])


class TestOutcomes(unittest.TestCase):
    """Run-level outcomes on the default 4x4 grid with 40 vehicles."""

    DURATION = 300.0

    @classmethod
    def setUpClass(cls):
        cls.base = ScenarioConfig.from_flat({"sim_duration": cls.DURATION, "output.event_log": False})
        cls.results = {}

    def outcome(self, mode="icrw", channel="ideal", alarm=1.0, seed=1):
        key = (mode, channel, alarm, seed)
        if key not in self.results:
            config = replace(self.base.with_alarm_threshold(alarm), behavior_mode=BehaviorMode(mode),
                             channel=parse_channel(channel), rng_seed=seed)
            self.results[key] = run(config)
        return self.results[key]

    def test_careful_drivers_never_collide_at_default_scale(self):
        for seed in (1, 2):
            with self.subTest(seed=seed):
                self.assertEqual(self.outcome("careful", seed=seed).collisions, [])

    def test_one_second_alarm_threshold_prevents_every_collision(self):
        for seed in (1, 2):
            with self.subTest(seed=seed):
                result = self.outcome(alarm=1.0, seed=seed)
                self.assertEqual(result.collisions, [])
                self.assertGreater(result.alarms, 0)
        self.assertGreater(len(self.outcome(alarm=0.5).collisions), 0)

    def test_collisions_fall_with_the_alarm_threshold(self):
        noapp = len(self.outcome("noapp").collisions)
        half = len(self.outcome(alarm=0.5).collisions)
        one = len(self.outcome(alarm=1.0).collisions)
        self.assertGreater(noapp, half)
        self.assertGreater(half, one)

    def test_noapp_ignores_the_channel(self):
        ideal = self.outcome("noapp")
        for channel in ("per:0.5", "emu:auto:500"):
            with self.subTest(channel=channel):
                other = self.outcome("noapp", channel=channel)
                self.assertEqual(other.collisions, ideal.collisions)
                self.assertEqual(other.trips, ideal.trips)
                self.assertEqual(other.packets_sent, 0)

    def test_total_packet_loss_behaves_like_noapp(self):
        silent = self.outcome(channel="per:1")
        noapp = self.outcome("noapp")
        self.assertEqual(silent.packets_delivered, 0)
        self.assertEqual((silent.warnings, silent.alarms), (0, 0))
        self.assertEqual(silent.collisions, noapp.collisions)
        self.assertEqual(silent.trips, noapp.trips)

    def test_time_improvement_shrinks_with_the_alarm_threshold(self):
        baseline = self.outcome("careful")
        improvements = [time_improvement_per_km(self.outcome(alarm=alarm), baseline) for alarm in (0.5, 1.5, 3.0)]
        self.assertGreater(improvements[0], 0.0)
        self.assertGreaterEqual(improvements[0], improvements[1])
        self.assertGreaterEqual(improvements[1], improvements[2])


if __name__ == '__main__':
    unittest.main()
