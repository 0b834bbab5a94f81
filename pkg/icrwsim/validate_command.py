#!/usr/bin/env python3
"""Implementation of the validate-channel command for icrwsim CLI."""

import logging
from pathlib import Path
from typing import Any, Dict

import click
from rich.console import Console
from rich.table import Table

from .channel.diagnostics import validate_profile
from .channel.profiles import PROFILES
from .output import REPORT_FILE, SPECTRA_FILE, write_report, write_spectra

# Initialize console for rich output
console = Console()

logger = logging.getLogger(__name__)


def execute_validate_command(args: Dict[str, Any]) -> int:
    """Execute the validate-channel command.

    Args:
        args: Command arguments

    Returns:
        Exit code (0 all checks pass, 1 usage error, 2 runtime failure, 3 a check failed)
    """
    debug = args.get('debug', False)
    if debug:
        logging.getLogger().setLevel(logging.DEBUG)

    name = args.get('profile', '')
    profile = PROFILES.get(name)
    if profile is None:
        console.print(f"[bold red]Usage Error:[/] Unknown profile '{name}'; choose from {', '.join(sorted(PROFILES))}")
        return 1
    samples = args.get('samples', 1_000_000)
    if samples < 1000:
        console.print("[bold red]Usage Error:[/] --samples must be at least 1000")
        return 1

    out_dir = Path(args['out'])
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with console.status(f"Validating [bold blue]{profile.name}[/] over {samples} samples"):
            checks, spectra = validate_profile(profile, samples=samples, seed=args.get('seed', 1))
        timestamp = args.get('timestamp', True)
        written = [write_report(out_dir / REPORT_FILE, checks, timestamp),
                   write_spectra(out_dir / SPECTRA_FILE, spectra, timestamp)]
    except OSError as e:
        console.print(f"[bold red]Error:[/] Cannot write report: {str(e)}")
        if debug:
            console.print_exception()
        return 2
    except Exception as e:
        console.print(f"[bold red]Error:[/] {str(e)}")
        if debug:
            console.print_exception()
        return 2

    table = Table(title=f"Channel Validation: {profile.name}")
    table.add_column("Check", style="cyan")
    table.add_column("Tap", justify="right")
    table.add_column("Value", justify="right")
    table.add_column("Limit", justify="right")
    table.add_column("Result")
    for check in checks:
        verdict = "[bold green]pass[/]" if check.passed else "[bold red]FAIL[/]"
        table.add_row(check.name, "" if check.tap is None else str(check.tap), f"{check.value:.4g}",
                      f"{check.limit:.4g}", verdict)
    console.print(table)
    for path in written:
        console.print(f"[bold green]✓[/] Wrote {path}")

    failed = [c for c in checks if not c.passed]
    if failed:
        console.print(f"[bold red]{len(failed)} check(s) failed[/]")
        return 3
    console.print("[bold green]All checks passed![/]")
    return 0


def setup_validate_command(main_group):
    """Set up the validate-channel command for the main CLI group.

    Args:
        main_group: Click group to attach the command to
    """
    @main_group.command(name='validate-channel')
    @click.option('--profile', '-p', default='urban-los', show_default=True,
                  help=f"Tap profile ({', '.join(sorted(PROFILES))})")
    @click.option('--samples', '-n', type=int, default=1_000_000, show_default=True,
                  help='Samples per tap trace')
    @click.option('--seed', type=click.IntRange(min=0), default=1, show_default=True, help='Random seed')
    @click.option('--out', '-o', type=click.Path(), default='results/validation', show_default=True,
                  help='Output directory')
    @click.option('--no-timestamp', is_flag=True, help='Omit the generation timestamp from CSV files')
    @click.option('--debug', is_flag=True, help='Enable debug mode with additional logging')
    @click.pass_context
    def validate_channel(ctx, profile, samples, seed, out, no_timestamp, debug):
        """Check fading statistics of a tap profile and write a pass/fail report."""
        command_args = {
            'command': 'validate-channel',
            'profile': profile,
            'samples': samples,
            'seed': seed,
            'out': out,
            'timestamp': not no_timestamp,
            'debug': debug,
        }
        ctx.exit(execute_validate_command(command_args))
