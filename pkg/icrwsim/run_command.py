#!/usr/bin/env python3
"""Implementation of the run command for icrwsim CLI."""

import logging
from pathlib import Path
from typing import Any, Dict

import click
from rich.console import Console
from rich.progress import BarColumn, Progress, TextColumn, TimeRemainingColumn
from rich.table import Table

from . import engine
from .channel.diagnostics import burstiness_from_packets
from .channel.models import channel_label
from .metrics import time_improvement_per_km
from .output import packet_rows, result_metrics, write_result
from .scenario import BehaviorMode
from .validator import ValidationError

# Initialize console for rich output
console = Console()

logger = logging.getLogger(__name__)


def _progress() -> Progress:
    return Progress(TextColumn("[progress.description]{task.description}"), BarColumn(),
                    TextColumn("{task.completed}/{task.total} steps"), TimeRemainingColumn(),
                    console=console, transient=True)


def execute_run_command(args: Dict[str, Any], validate_and_apply_config) -> int:
    """Execute the run command.

    Args:
        args: Command arguments
        validate_and_apply_config: Function to load and validate the configuration

    Returns:
        Exit code (0 success, 1 configuration error, 2 runtime failure)
    """
    debug = args.get('debug', False)
    try:
        config_manager = validate_and_apply_config('run', args)
        scenario = config_manager.to_scenario()
    except ValidationError as e:
        console.print(f"[bold red]Validation Error:[/] {str(e)}")
        return 1

    out_dir = Path(args['out'])
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        console.print(f"Running [bold blue]{scenario.behavior_mode.value}[/] on channel "
                      f"[bold blue]{channel_label(scenario.channel)}[/] with seed {scenario.rng_seed}")

        with _progress() as progress:
            task = progress.add_task("Simulating", total=scenario.steps)
            result = engine.run(scenario, lambda done, total: progress.update(task, completed=done))

            improvement = None
            if args.get('baseline', True):
                if scenario.behavior_mode is BehaviorMode.CAREFUL:
                    baseline = result
                else:
                    task = progress.add_task("Careful baseline", total=scenario.steps)
                    baseline = engine.run(engine.baseline_config(scenario),
                                          lambda done, total: progress.update(task, completed=done))
                improvement = time_improvement_per_km(result, baseline)

        burstiness = None
        if scenario.packet_log and result.packet_log:
            burstiness = burstiness_from_packets(packet_rows(result.packet_log))

        written = write_result(out_dir, result, improvement, burstiness, timestamp=args.get('timestamp', True))
    except OSError as e:
        console.print(f"[bold red]Error:[/] Cannot write results: {str(e)}")
        if debug:
            console.print_exception()
        return 2
    except Exception as e:
        console.print(f"[bold red]Error:[/] {str(e)}")
        if debug:
            console.print_exception()
        return 2

    table = Table(title="Run Summary")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="green")
    for name, value in result_metrics(result, improvement, burstiness):
        if name.startswith("config."):
            continue
        table.add_row(name, f"{value:.4g}" if isinstance(value, float) else str(value))
    console.print(table)
    for path in written:
        console.print(f"[bold green]✓[/] Wrote {path}")
    return 0


def setup_run_command(main_group, validate_and_apply_config):
    """Set up the run command for the main CLI group.

    Args:
        main_group: Click group to attach the command to
        validate_and_apply_config: Function to load and validate the configuration
    """
    @main_group.command()
    @click.option('--config', '-c', type=click.Path(), help='Experiment configuration file (JSON)')
    @click.option('--set', 'overrides', multiple=True, metavar='KEY=VALUE',
                  help='Override one configuration key; repeatable')
    @click.option('--out', '-o', type=click.Path(), default='results', show_default=True,
                  help='Output directory')
    @click.option('--baseline/--no-baseline', default=True,
                  help='Run the careful baseline to report the time improvement')
    @click.option('--no-timestamp', is_flag=True, help='Omit the generation timestamp from CSV files')
    @click.option('--debug', is_flag=True, help='Enable debug mode with additional logging')
    @click.pass_context
    def run(ctx, config, overrides, out, baseline, no_timestamp, debug):
        """Execute one simulation run and write its results."""
        command_args = {
            'command': 'run',
            'config': config,
            'overrides': list(overrides),
            'out': out,
            'baseline': baseline,
            'timestamp': not no_timestamp,
            'debug': debug,
        }
        ctx.exit(execute_run_command(command_args, validate_and_apply_config))
