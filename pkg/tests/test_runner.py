#!/usr/bin/env python3
"""Scenario runner for configuration layering and validation."""

import json
import os
import sys
import tempfile
import unittest
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

# Add the parent directory to the path to import from icrwsim
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from rich.console import Console
from rich.panel import Panel
from rich.progress import BarColumn, Progress, TextColumn
from rich.table import Table

from icrwsim.config import Configuration
from icrwsim.validator import ValidationError

SCENARIOS_FILE = Path(__file__).parent / "test_scenarios.json"


class TestResult:
    """Stores the result of a test scenario."""

    def __init__(self, scenario_id: int, description: str, category: str, success: bool, details: str = ""):
        self.scenario_id = scenario_id
        self.description = description
        self.category = category
        self.success = success
        self.details = details


class TestRunner:
    """Runner for configuration scenarios."""

    def __init__(self, scenarios_file: Path):
        """Initialize a test runner.

        Args:
            scenarios_file: Path to the JSON file containing test scenarios
        """
        self.scenarios_file = scenarios_file
        self.scenarios: List[Dict[str, Any]] = []
        self.results: List[TestResult] = []
        self.console = Console()

        with open(self.scenarios_file, 'r') as f:
            self.scenarios = json.load(f).get('test_scenarios', [])

    def _setup_config_files(self, scenario: Dict[str, Any], workdir: Path) -> Tuple[Optional[Path], Path]:
        """Write the scenario's files into `workdir`.

        Returns:
            Tuple of (experiment_path, global_path); the global file may not exist
        """
        files = scenario.get('config_files', {})
        global_path = workdir / "home" / "config.json"
        experiment_path = None
        if 'global' in files:
            global_path.parent.mkdir(parents=True)
            global_path.write_text(json.dumps(files['global'], indent=2))
        if 'experiment' in files:
            experiment_path = workdir / "experiment.json"
            experiment_path.write_text(json.dumps(files['experiment'], indent=2))
        return experiment_path, global_path

    def run_scenario(self, scenario: Dict[str, Any]) -> Tuple[bool, str]:
        """Run a single scenario.

        Returns:
            Tuple of (success, details)
        """
        expected = scenario.get('expected', {})
        with tempfile.TemporaryDirectory() as tmp:
            experiment_path, global_path = self._setup_config_files(scenario, Path(tmp))
            config = Configuration(global_path=global_path)
            try:
                config.load_config(str(experiment_path) if experiment_path else None,
                                   scenario.get('overrides', []))
                scenario_config = config.to_scenario()
            except ValidationError as e:
                if expected.get('success', True):
                    return False, f"Unexpected error: {e}"
                if expected.get('error', '').lower() not in str(e).lower():
                    return False, f"Error did not match '{expected['error']}': {e}"
                return True, "Expected error occurred"

        if not expected.get('success', True):
            return False, "Expected failure, but configuration was accepted"
        for key, value in expected.get('values', {}).items():
            if config.get(key) != value:
                return False, f"{key} is {config.get(key)!r}, expected {value!r}"
        for attr, value in expected.get('scenario', {}).items():
            if getattr(scenario_config, attr) != value:
                return False, f"scenario.{attr} is {getattr(scenario_config, attr)!r}, expected {value!r}"
        return True, "Test passed"

    def run_all_tests(self) -> bool:
        """Run all scenarios and show the results.

        Returns:
            True if every scenario passed
        """
        self.console.print(Panel.fit(f"[bold]Running {len(self.scenarios)} test scenarios[/]",
                                     title="icrwsim Configuration Scenarios", border_style="blue"))
        with Progress(TextColumn("[progress.description]{task.description}"), BarColumn(),
                      TextColumn("[progress.percentage]{task.percentage:>3.0f}%"), console=self.console) as progress:
            task = progress.add_task("[cyan]Running tests...", total=len(self.scenarios))
            for scenario in self.scenarios:
                success, details = self.run_scenario(scenario)
                self.results.append(TestResult(scenario.get('id', 0), scenario.get('description', 'Unnamed test'),
                                               scenario.get('test_category', 'Uncategorized'), success, details))
                progress.update(task, advance=1)
        self._show_results()
        return all(r.success for r in self.results)

    def _show_results(self) -> None:
        total = len(self.results)
        passed = sum(1 for r in self.results if r.success)
        self.console.print(Panel.fit(f"[bold]Test Summary: {passed}/{total} passed[/]", title="Test Results",
                                     border_style="green" if passed == total else "red"))

        for category in sorted(set(r.category for r in self.results)):
            table = Table(title=category, show_header=True, header_style="bold")
            table.add_column("ID", justify="right", style="cyan")
            table.add_column("Description")
            table.add_column("Result", justify="center")
            table.add_column("Details")
            for result in sorted((r for r in self.results if r.category == category), key=lambda r: r.scenario_id):
                table.add_row(str(result.scenario_id), result.description,
                              "[bold green]PASS[/]" if result.success else "[bold red]FAIL[/]", result.details)
            self.console.print(table)


class TestConfigurationScenarios(unittest.TestCase):
    """Runs every configuration scenario as a subtest."""

    def test_scenarios(self):
        runner = TestRunner(SCENARIOS_FILE)
        self.assertGreater(len(runner.scenarios), 0)
        for scenario in runner.scenarios:
            with self.subTest(id=scenario['id'], description=scenario['description']):
                success, details = runner.run_scenario(scenario)
                self.assertTrue(success, details)


if __name__ == '__main__':
    sys.exit(0 if TestRunner(SCENARIOS_FILE).run_all_tests() else 1)
