#!/usr/bin/env python3
"""Implementation of the schema command for icrwsim CLI."""

import json

import click
from rich.console import Console
from rich.tree import Tree

# Initialize console for rich output
console = Console()


def _describe(option) -> str:
    parts = [f"[cyan]{option.name}[/cyan] [dim]({option.type})[/dim]: {option.description}"]
    if option.default is not None:
        parts.append(f"[green]default {json.dumps(option.default)}[/green]")
    if option.choices:
        parts.append(f"[yellow]one of {', '.join(option.choices)}[/yellow]")
    if option.minimum is not None:
        parts.append(f"{'>' if option.exclusive_minimum else '>='} {option.minimum}")
    if option.maximum is not None:
        parts.append(f"<= {option.maximum}")
    return "  ".join(parts)


def execute_schema_command(validator):
    """Execute the schema command.

    Args:
        validator: ConfigValidator instance

    Returns:
        Exit code (0 for success)
    """
    schema_data = validator.schema
    tree = Tree(f"[bold magenta]{schema_data['name']} configuration[/bold magenta] v{schema_data.get('version', '?')}")

    sections = {}
    for option in validator.options.values():
        sections.setdefault(option.section, []).append(option)
    keys_branch = tree.add("[bold green]Keys[/bold green]")
    for section, options in sections.items():
        section_branch = keys_branch.add(f"[bold blue]{section}[/bold blue]")
        for option in options:
            section_branch.add(_describe(option))

    if schema_data.get('configurationSources'):
        config_branch = tree.add("[bold yellow]Configuration Sources[/bold yellow]")
        for source in schema_data['configurationSources']:
            priority = source.get('priority', 0)
            config_branch.add(f"[cyan]{priority}.[/cyan] {source['name']}: {source['description']}")

    console.print(tree)
    return 0


def setup_schema_command(main_group, validator):
    """Set up the schema command for the main CLI group.

    Args:
        main_group: Click group to attach the command to
        validator: ConfigValidator instance
    """
    @main_group.command()
    @click.pass_context
    def schema(ctx):
        """Visualize the configuration schema."""
        ctx.exit(execute_schema_command(validator))
