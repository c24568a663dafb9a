"""Main CLI entry point for compose-mcts.

Provides the click command line for dataset generation, action-table
precomputation, training, evaluation, benchmarking and rendering.
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional

import click
import yaml
from tabulate import tabulate

from ..lib.config import Config
from ..lib.exceptions import ComposeError
from .commands import dataset, evaluate, render, tangram, train

__version__ = "0.1.0"

EXIT_USAGE = 1


def setup_logging(verbose: bool = False, level_name: Optional[str] = None) -> None:
    """Setup logging configuration.

    Args:
        verbose: Enable verbose logging
        level_name: Level name from the environment, used when not verbose
    """
    level = logging.DEBUG if verbose else logging.getLevelName((level_name or "INFO").upper())
    if not isinstance(level, int):
        level = logging.INFO

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
        if verbose else "%(levelname)s: %(message)s"
    )
    console_handler.setFormatter(formatter)

    logger = logging.getLogger("compose_mcts")
    logger.setLevel(level)
    logger.handlers = [console_handler]
    logger.propagate = False


def validate_config_file(ctx: click.Context, param: click.Parameter, value: Optional[str]) -> Optional[str]:
    """Validate config file path callback."""
    if value is None:
        return None
    config_path = Path(value)
    if not config_path.is_file():
        raise click.BadParameter(f"Config file not found: {value}")
    return str(config_path.resolve())


def format_output(data: Any, output_format: str) -> str:
    """Format output data according to specified format.

    Args:
        data: Data to format
        output_format: Output format (json, yaml, table)

    Returns:
        Formatted string output
    """
    if output_format == "json":
        return json.dumps(data, indent=2, default=str)
    if output_format == "yaml":
        return yaml.safe_dump(json.loads(json.dumps(data, default=str)), default_flow_style=False, sort_keys=False)
    if isinstance(data, list) and data and isinstance(data[0], dict):
        return tabulate(data, headers="keys", floatfmt=".2f")
    if isinstance(data, dict):
        return tabulate([(k, v) for k, v in data.items()], tablefmt="plain")
    return str(data)


class ComposeGroup(click.Group):
    """Click group mapping library errors and usage errors onto exit codes."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except ComposeError as e:
            logging.getLogger("compose_mcts.cli").debug("Command failed", exc_info=True)
            click.echo(f"Error: {e}", err=True)
            sys.exit(e.exit_code)
        except (SystemExit, click.ClickException, click.Abort):
            raise
        except Exception as e:
            if ctx.find_root().params.get("verbose"):
                import traceback
                click.echo(traceback.format_exc(), err=True)
            click.echo(f"Unexpected error: {e}", err=True)
            sys.exit(EXIT_USAGE)

    def main(self, *args: Any, **kwargs: Any) -> Any:
        kwargs["standalone_mode"] = False
        try:
            rv = super().main(*args, **kwargs)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        sys.exit(rv if isinstance(rv, int) else 0)


@click.group(cls=ComposeGroup, invoke_without_command=True)
@click.option("--config", "-c", type=str, callback=validate_config_file,
              help="JSON or YAML run config (a previous run's config.json works)")
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose output")
@click.option("--format", "-f", "output_format", type=click.Choice(["json", "yaml", "table"], case_sensitive=False),
              default="table", help="Output format (default: table)")
@click.option("--jobs", "-j", type=click.IntRange(min=1), help="Worker processes (default: available cores)")
@click.option("--seed", type=int, help="Global seed (default: COMPOSE_MCTS_SEED or 0)")
@click.version_option(version=__version__, prog_name="compose-mcts")
@click.pass_context
def cli(
    ctx: click.Context,
    config: Optional[str],
    verbose: bool,
    output_format: str,
    jobs: Optional[int],
    seed: Optional[int],
) -> None:
    """compose-mcts - constrained visual composition with Gumbel MCTS.

    Generates rectangle and tangram datasets, trains a policy/value network
    and a goal-conditioned reward model with adversarial self-play, and
    evaluates search against policy-only and guidance baselines.

    Examples:

        # Desk-scale rectangle dataset and a short training run
        compose-mcts gen-rect --out data
        compose-mcts train --data data --iterations 5 --out runs/rect

        # Compare random, greedy, search and guidance on the test split
        compose-mcts benchmark --data data --checkpoint runs/rect/checkpoints/005.json --out reports
    """
    if ctx.obj is None:
        ctx.obj = {}
    config_instance = Config(config_file=config)
    setup_logging(verbose, config_instance.get("logging.level"))
    logger = logging.getLogger("compose_mcts.cli")
    logger.debug(f"compose-mcts v{__version__} starting")

    ctx.obj["config_instance"] = config_instance
    ctx.obj["verbose"] = verbose
    ctx.obj["output_format"] = output_format.lower()
    ctx.obj["format_output"] = format_output
    ctx.obj["jobs"] = jobs
    ctx.obj["seed"] = seed

    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


cli.add_command(dataset.gen_rect)
cli.add_command(tangram.precompute_tangram)
cli.add_command(tangram.gen_tangram)
cli.add_command(train.train)
cli.add_command(evaluate.eval_command)
cli.add_command(evaluate.benchmark)
cli.add_command(render.render)


def main() -> None:
    """Main entry point for the compose-mcts command."""
    cli()


if __name__ == "__main__":
    main()
