#!/usr/bin/env python3
"""Implementation of the config command for icrwsim CLI."""

import json
from pathlib import Path

import click
from rich.console import Console
from rich.panel import Panel

from .validator import ValidationError

# Initialize console for rich output
console = Console()


def execute_config_command(args, validate_and_apply_config):
    """Execute the config command.

    Args:
        args: Command arguments
        validate_and_apply_config: Function to load and validate the configuration

    Returns:
        Exit code (0 for success, 1 for configuration errors, 2 if a file cannot be written)
    """
    source = args.get('source', 'effective')
    write_path = args.get('write')
    create_global = args.get('create_global', False)
    debug = args.get('debug', False)

    try:
        config_manager = validate_and_apply_config('config', args)
        if args.get('check', False):
            config_manager.to_scenario()
    except ValidationError as e:
        console.print(f"[bold red]Validation Error:[/] {str(e)}")
        return 1
    except Exception as e:
        console.print(f"[bold red]Error:[/] {str(e)}")
        if debug:
            console.print_exception()
        return 2

    if write_path:
        if not config_manager.write(Path(write_path)):
            console.print(f"[bold red]Error:[/] Could not write {write_path}")
            return 2
        console.print(f"[bold green]✓[/] Wrote effective configuration to {write_path}")

    if create_global:
        if not config_manager.create_global_config():
            console.print("[bold red]Error:[/] Could not create the global configuration file")
            return 2
        console.print("[bold green]✓[/] Created global configuration file with the effective settings")

    if source in ['all', 'global']:
        if config_manager.global_config:
            console.print(Panel(
                json.dumps(config_manager.global_config, indent=2, sort_keys=True),
                title="Global Configuration (~/.icrwsim/config.json)",
                border_style="blue"
            ))
        else:
            console.print("[yellow]No global configuration found[/]")

    if source in ['all', 'experiment']:
        if config_manager.experiment_config:
            console.print(Panel(
                json.dumps(config_manager.experiment_config, indent=2, sort_keys=True),
                title=f"Experiment Configuration ({args.get('config')})",
                border_style="green"
            ))
        else:
            console.print("[yellow]No experiment configuration given[/]")

    if source in ['all', 'effective']:
        console.print(Panel(
            json.dumps(config_manager.as_dict(), indent=2, sort_keys=True),
            title="Effective Configuration",
            border_style="yellow"
        ))

    if args.get('check', False):
        console.print("[bold green]✓[/] Configuration describes a valid scenario")
    return 0


def setup_config_command(main_group, validate_and_apply_config):
    """Set up the config command for the main CLI group.

    Args:
        main_group: Click group to attach the command to
        validate_and_apply_config: Function to load and validate the configuration
    """
    @main_group.command()
    @click.option('--config', '-c', type=click.Path(), help='Experiment configuration file (JSON)')
    @click.option('--set', 'overrides', multiple=True, metavar='KEY=VALUE',
                  help='Override one configuration key; repeatable')
    @click.option('--source', type=click.Choice(['all', 'global', 'experiment', 'effective']),
                  default='effective', help='Which configuration source to display')
    @click.option('--write', type=click.Path(), help='Write the effective configuration to a file')
    @click.option('--create-global', is_flag=True,
                  help='Write the effective configuration to the global config file')
    @click.option('--check', is_flag=True, help='Also check the scenario invariants')
    @click.option('--debug', is_flag=True, help='Enable debug mode with additional logging')
    @click.pass_context
    def config(ctx, config, overrides, source, write, create_global, check, debug):
        """Display and manage layered configuration."""
        command_args = {
            'command': 'config',
            'config': config,
            'overrides': list(overrides),
            'source': source,
            'write': write,
            'create_global': create_global,
            'check': check,
            'debug': debug,
        }
        ctx.exit(execute_config_command(command_args, validate_and_apply_config))
