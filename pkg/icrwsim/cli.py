#!/usr/bin/env python3
"""Command line interface for icrwsim with layered, schema-validated configuration."""

import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import click
from rich.console import Console
from rich.markdown import Markdown
from rich.panel import Panel

from . import __version__
from .config import Configuration
from .config_command import setup_config_command
from .run_command import setup_run_command
from .schema_command import setup_schema_command
from .sweep_command import setup_sweep_command
from .validate_command import setup_validate_command
from .validator import ConfigValidator

# Initialize console for rich output
console = Console()

validator = ConfigValidator()


class ExitCodeGroup(click.Group):
    """Click group that reports usage errors with exit status 1."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = 1
            raise


def validate_and_apply_config(command: str, args: Dict[str, Any],
                              global_path: Optional[Path] = None) -> Configuration:
    """Load every configuration source for a command and validate it.

    Args:
        command: The command being executed
        args: The command arguments; `config` and `overrides` are read
        global_path: Replacement for the global configuration file

    Returns:
        The loaded Configuration

    Raises:
        ValidationError: If any source is missing or invalid
    """
    if args.get('debug'):
        logging.getLogger().setLevel(logging.DEBUG)
    config_manager = Configuration(validator, global_path)
    config_manager.load_config(args.get('config'), args.get('overrides', ()))
    logging.getLogger(__name__).debug(f"Configuration for '{command}' loaded")
    return config_manager


def display_readme():
    """Display the README file and exit."""
    try:
        readme_path = Path.cwd() / "README.md"
        with open(readme_path, 'r') as f:
            console.print(Panel(Markdown(f.read()), title="README", border_style="blue"))
        sys.exit(0)
    except FileNotFoundError:
        console.print("[bold red]README.md not found![/]")
        sys.exit(1)


@click.group(cls=ExitCodeGroup, invoke_without_command=True)
@click.version_option(__version__)
@click.option('--readme', is_flag=True, help='Display README and exit')
@click.pass_context
def main(ctx, readme):
    """icrwsim - traffic and V2X co-simulation of intersection collision warnings."""
    if readme:
        display_readme()

    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())
        ctx.exit(0)


# Set up commands that were defined in separate modules
setup_run_command(main, validate_and_apply_config)
setup_sweep_command(main, validate_and_apply_config)
setup_validate_command(main)
setup_config_command(main, validate_and_apply_config)
setup_schema_command(main, validator)

if __name__ == '__main__':
    main()
