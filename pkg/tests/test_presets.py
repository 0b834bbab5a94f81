"""Tests for sweep axis parsing and presets."""

import os
import sys
import unittest

# Add the parent directory to the path to import from icrwsim
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from icrwsim.presets import ALARM_GRID, FIGURE_CHANNELS, parse_channels, parse_seeds, parse_thresholds
from icrwsim.sweep_command import resolve_axes


class TestParsers(unittest.TestCase):

    def test_seeds(self):
        self.assertEqual(parse_seeds("1-3,7"), [1, 2, 3, 7])
        self.assertEqual(parse_seeds("2,2,1-2"), [2, 1])
        for bad in ("", "3-1", "a", "-1"):
            with self.subTest(text=bad), self.assertRaises(ValueError):
                parse_seeds(bad)

    def test_thresholds(self):
        self.assertEqual(parse_thresholds("0.5, 1,2.5"), [0.5, 1.0, 2.5])
        for bad in ("", "0", "1,-2", "x"):
            with self.subTest(text=bad), self.assertRaises(ValueError):
                parse_thresholds(bad)

    def test_channels(self):
        self.assertEqual(parse_channels("NoApp, per:0.5,emu:los:300"), ["noapp", "per:0.5", "emu:los:300"])
        for bad in ("", "wifi", "per:x"):
            with self.subTest(text=bad), self.assertRaises(ValueError):
                parse_channels(bad)

    def test_figure_presets_are_valid(self):
        for labels in FIGURE_CHANNELS.values():
            self.assertEqual(parse_channels(",".join(labels)), list(labels))


class TestResolveAxes(unittest.TestCase):

    def test_figure_defaults(self):
        axes = resolve_axes({"figure": "4", "seeds": "1-2"})
        self.assertEqual(axes["thresholds"], list(ALARM_GRID))
        self.assertEqual(axes["channels"], list(FIGURE_CHANNELS[4]))
        self.assertEqual(axes["seeds"], [1, 2])

    def test_explicit_axes_win(self):
        axes = resolve_axes({"figure": "3", "channels": "ideal", "alarm_thresholds": "1.5", "seeds": "4"})
        self.assertEqual(axes, {"thresholds": [1.5], "channels": ["ideal"], "seeds": [4]})

    def test_channels_required(self):
        with self.assertRaises(ValueError):
            resolve_axes({"seeds": "1"})


if __name__ == '__main__':
    unittest.main()
