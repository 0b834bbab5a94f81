"""Tests for layered configuration loading."""

import json
import os
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

# Add the parent directory to the path to import from icrwsim
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from icrwsim.channel.models import DistanceCutoff
from icrwsim.config import Configuration, default_global_path, parse_override
from icrwsim.scenario import BehaviorMode
from icrwsim.validator import ValidationError


class TestParseOverride(unittest.TestCase):
    """Tests for `--set key=value` parsing."""

    def test_json_values(self):
        self.assertEqual(parse_override("vehicle_count=12"), ("vehicle_count", 12))
        self.assertEqual(parse_override("sim_duration=60.5"), ("sim_duration", 60.5))
        self.assertEqual(parse_override("output.packet_log=true"), ("output.packet_log", True))
        self.assertEqual(parse_override("warning_threshold=null"), ("warning_threshold", None))

    def test_plain_strings(self):
        self.assertEqual(parse_override("behavior_mode=careful"), ("behavior_mode", "careful"))
        self.assertEqual(parse_override(" channel.kind =emu"), ("channel.kind", "emu"))

    def test_missing_separator(self):
        with self.assertRaises(ValidationError):
            parse_override("vehicle_count")
        with self.assertRaises(ValidationError):
            parse_override("=3")


class TestConfiguration(unittest.TestCase):
    """Tests for the Configuration class."""

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.root = Path(self.temp_dir.name)
        self.global_path = self.root / "home" / "config.json"

    def tearDown(self):
        self.temp_dir.cleanup()

    def write(self, path, data):
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=2) if not isinstance(data, str) else data)
        return path

    def test_defaults_without_files(self):
        config = Configuration(global_path=self.global_path)
        config.load_config()
        self.assertEqual(config["vehicle_count"], 40)
        self.assertEqual(config.global_config, {})
        scenario = config.to_scenario()
        self.assertIs(scenario.behavior_mode, BehaviorMode.ICRW)
        self.assertEqual(scenario.warning_threshold, 2.0)

    def test_precedence(self):
        self.write(self.global_path, {"vehicle_count": 30, "rng_seed": 9, "sim_duration": 100})
        experiment = self.write(self.root / "exp.json", {"vehicle_count": 20, "sim_duration": 50})
        config = Configuration(global_path=self.global_path)
        config.load_config(str(experiment), ["sim_duration=25"])
        self.assertEqual(config["rng_seed"], 9)
        self.assertEqual(config["vehicle_count"], 20)
        self.assertEqual(config["sim_duration"], 25)
        self.assertEqual(config.experiment_config, {"vehicle_count": 20, "sim_duration": 50})

    def test_comment_keys_dropped(self):
        experiment = self.write(self.root / "exp.json", {"_comment": "notes", "behavior_mode": "careful"})
        config = Configuration(global_path=self.global_path)
        config.load_config(str(experiment))
        self.assertNotIn("_comment", config)
        self.assertIs(config.to_scenario().behavior_mode, BehaviorMode.CAREFUL)

    def test_unknown_key_reports_file_and_line(self):
        experiment = self.write(self.root / "exp.json", '{\n  "vehicle_count": 20,\n  "vehicle_cont": 3\n}\n')
        config = Configuration(global_path=self.global_path)
        with self.assertRaises(ValidationError) as raised:
            config.load_config(str(experiment))
        self.assertEqual(raised.exception.errors, [f"{experiment}:3: Unknown configuration key: vehicle_cont"])

    def test_errors_from_every_source(self):
        self.write(self.global_path, {"rng_seed": -2})
        experiment = self.write(self.root / "exp.json", {"behavior_mode": "reckless"})
        config = Configuration(global_path=self.global_path)
        with self.assertRaises(ValidationError) as raised:
            config.load_config(str(experiment), ["channel.per=2"])
        errors = raised.exception.errors
        self.assertEqual(len(errors), 3)
        self.assertTrue(errors[0].startswith(f"{self.global_path}:"))
        self.assertTrue(errors[2].startswith("--set: "))

    def test_malformed_json(self):
        experiment = self.write(self.root / "exp.json", '{\n  "vehicle_count": 20,\n}\n')
        config = Configuration(global_path=self.global_path)
        with self.assertRaises(ValidationError) as raised:
            config.load_config(str(experiment))
        self.assertTrue(raised.exception.errors[0].startswith(f"{experiment}:3:"))

    def test_missing_experiment_file(self):
        config = Configuration(global_path=self.global_path)
        with self.assertRaises(ValidationError) as raised:
            config.load_config(str(self.root / "nope.json"))
        self.assertIn("not found", str(raised.exception))

    def test_overrides_build_channel(self):
        config = Configuration(global_path=self.global_path)
        config.load_config(None, ["channel.kind=dmax", "channel.dmax=20"])
        self.assertEqual(config.to_scenario().channel, DistanceCutoff(20.0))

    def test_scenario_invariants_checked(self):
        config = Configuration(global_path=self.global_path)
        config.load_config(None, ["alarm_threshold=3", "warning_threshold=2"])
        with self.assertRaises(ValidationError):
            config.to_scenario()

    def test_create_global_config(self):
        config = Configuration(global_path=self.global_path)
        config.load_config(None, ["rng_seed=7"])
        self.assertTrue(config.create_global_config())
        saved = json.loads(self.global_path.read_text())
        self.assertEqual(saved["rng_seed"], 7)

        reloaded = Configuration(global_path=self.global_path)
        reloaded.load_config()
        self.assertEqual(reloaded["rng_seed"], 7)

    def test_write_failure(self):
        blocker = self.write(self.root / "file", "x")
        config = Configuration(global_path=self.global_path)
        config.load_config()
        self.assertFalse(config.write(blocker / "config.json"))

    def test_missing_key(self):
        config = Configuration(global_path=self.global_path)
        config.load_config()
        with self.assertRaises(KeyError):
            config["nope"]
        self.assertEqual(config.get("nope", 3), 3)
        self.assertIn("channel.kind", config.keys())


class TestGlobalPath(unittest.TestCase):
    """Tests for the location of the global configuration file."""

    def test_environment_override(self):
        with patch.dict(os.environ, {"ICRWSIM_HOME": "/tmp/icrw-home"}):
            self.assertEqual(default_global_path(), Path("/tmp/icrw-home/config.json"))

    def test_home_directory(self):
        with patch.dict(os.environ, {}, clear=True):
            self.assertEqual(default_global_path().parent.name, ".icrwsim")


if __name__ == '__main__':
    unittest.main()
