#!/usr/bin/env python3
"""Implementation of the sweep command for icrwsim CLI."""

import logging
import math
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
from rich.console import Console
from rich.progress import BarColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

from .charts import plot_sweep
from .engine import SweepRow, sweep
from .output import SUMMARY_FILE, write_summary
from .presets import (ALARM_GRID, DEFAULT_SEEDS, FIGURE_CHANNELS, FULL_SCALE_DURATION, parse_channels, parse_seeds,
                      parse_thresholds)
from .validator import ValidationError

# Initialize console for rich output
console = Console()

logger = logging.getLogger(__name__)


def resolve_axes(args: Dict[str, Any]) -> Dict[str, List[Any]]:
    """Turn the axis options (or a figure preset) into threshold, channel and seed lists.

    Raises:
        ValueError: If an axis is empty or malformed, or no channel list is given
    """
    figure: Optional[str] = args.get('figure')
    thresholds = args.get('alarm_thresholds')
    channels = args.get('channels')
    if channels is None:
        if figure is None:
            raise ValueError("Give --channels or a --figure preset")
        channels = ",".join(FIGURE_CHANNELS[int(figure)])
    if thresholds is None:
        thresholds = ",".join(str(x) for x in ALARM_GRID)
    return {
        'thresholds': parse_thresholds(thresholds),
        'channels': parse_channels(channels),
        'seeds': parse_seeds(args.get('seeds', DEFAULT_SEEDS)),
    }


def _fmt(value: float) -> str:
    return "-" if math.isnan(value) else f"{value:.3f}"


def display_rows(rows: List[SweepRow]) -> None:
    table = Table(title="Sweep Summary")
    table.add_column("Channel", style="cyan")
    table.add_column("Alarm [s]", justify="right")
    table.add_column("Collisions/h", style="red", justify="right")
    table.add_column("±95%", justify="right")
    table.add_column("Time gain [s/km]", style="green", justify="right")
    table.add_column("±95%", justify="right")
    table.add_column("Delivery", style="yellow", justify="right")
    for row in rows:
        s = row.summary
        table.add_row(row.channel, f"{row.alarm_threshold:g}", _fmt(s.collisions_per_hour),
                      _fmt(s.collisions_half_width), _fmt(s.time_improvement_per_km), _fmt(s.time_half_width),
                      _fmt(row.delivery_ratio))
    console.print(table)


def execute_sweep_command(args: Dict[str, Any], validate_and_apply_config) -> int:
    """Execute the sweep command.

    Args:
        args: Command arguments
        validate_and_apply_config: Function to load and validate the configuration

    Returns:
        Exit code (0 success, 1 usage or configuration error, 2 runtime failure)
    """
    debug = args.get('debug', False)
    try:
        axes = resolve_axes(args)
        base = validate_and_apply_config('sweep', args).to_scenario()
    except ValueError as e:
        console.print(f"[bold red]Usage Error:[/] {str(e)}")
        return 1
    except ValidationError as e:
        console.print(f"[bold red]Validation Error:[/] {str(e)}")
        return 1

    if args.get('paper_scale'):
        base = replace(base, sim_duration=FULL_SCALE_DURATION)
    out_dir = Path(args['out'])
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        console.print(f"Sweeping {len(axes['thresholds'])} thresholds x {len(axes['channels'])} channels "
                      f"x {len(axes['seeds'])} seeds ({base.sim_duration:g} s each)")
        with Progress(TextColumn("[progress.description]{task.description}"), BarColumn(),
                      TextColumn("{task.completed}/{task.total} runs"), TimeElapsedColumn(),
                      console=console, transient=True) as progress:
            task = progress.add_task("Sweep", total=None)
            rows = sweep(base, axes['thresholds'], axes['channels'], axes['seeds'],
                         workers=args.get('workers', 1),
                         progress=lambda done, total: progress.update(task, completed=done, total=total))

        timestamp = args.get('timestamp', True)
        written = [write_summary(out_dir / SUMMARY_FILE, rows, timestamp)]
        written += plot_sweep(rows, out_dir, timestamp)
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

    display_rows(rows)
    for path in written:
        console.print(f"[bold green]✓[/] Wrote {path}")
    return 0


def setup_sweep_command(main_group, validate_and_apply_config):
    """Set up the sweep command for the main CLI group.

    Args:
        main_group: Click group to attach the command to
        validate_and_apply_config: Function to load and validate the configuration
    """
    @main_group.command(name='sweep')
    @click.option('--config', '-c', type=click.Path(), help='Base experiment configuration file (JSON)')
    @click.option('--set', 'overrides', multiple=True, metavar='KEY=VALUE',
                  help='Override one configuration key; repeatable')
    @click.option('--figure', type=click.Choice(['3', '4']),
                  help='Channel preset: 3 for reference channels, 4 for emulated channels')
    @click.option('--alarm-thresholds', '-a', help='Comma-separated alarm thresholds in seconds')
    @click.option('--channels', help='Comma-separated channels: noapp, ideal, per:P, dmax:M, emu:[auto|los|nlos:]BYTES')
    @click.option('--seeds', default=DEFAULT_SEEDS, show_default=True, help='Seeds as ranges and values, e.g. 1-5,9')
    @click.option('--paper-scale', is_flag=True, help=f'Run {FULL_SCALE_DURATION:g} s per cell')
    @click.option('--workers', '-w', type=click.IntRange(min=1), default=1, show_default=True,
                  help='Parallel worker processes')
    @click.option('--out', '-o', type=click.Path(), default='results/sweep', show_default=True,
                  help='Output directory')
    @click.option('--no-timestamp', is_flag=True, help='Omit the generation timestamp from CSV files')
    @click.option('--debug', is_flag=True, help='Enable debug mode with additional logging')
    @click.pass_context
    def sweep_cmd(ctx, config, overrides, figure, alarm_thresholds, channels, seeds, paper_scale, workers, out,
                  no_timestamp, debug):
        """Sweep alarm thresholds and channels over several seeds."""
        command_args = {
            'command': 'sweep',
            'config': config,
            'overrides': list(overrides),
            'figure': figure,
            'alarm_thresholds': alarm_thresholds,
            'channels': channels,
            'seeds': seeds,
            'paper_scale': paper_scale,
            'workers': workers,
            'out': out,
            'timestamp': not no_timestamp,
            'debug': debug,
        }
        ctx.exit(execute_sweep_command(command_args, validate_and_apply_config))
