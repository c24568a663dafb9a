"""Evaluation and benchmark commands."""

import logging
from typing import Any, Callable, Optional

import click

from ...lib.config import BenchmarkConfig, EvalConfig, prepare_output_dir, write_resolved_config
from ...services.evaluation import run_evaluation
from ..options import command_config, emit, run_options

logger = logging.getLogger("compose_mcts.cli.evaluate")

METHODS = ["greedy", "sampled", "search", "random", "guidance"]


def eval_options(func: Callable) -> Callable:
    options = [
        click.option("--env", type=click.Choice(["rect", "tangram"]), help="Environment (default: rect)"),
        click.option("--data", type=str, help="Dataset directory"),
        click.option("--actions", type=str, help="Tangram action table"),
        click.option("--checkpoint", type=str, help="Training checkpoint with the frozen networks"),
        click.option("--split", type=click.Choice(["train", "val", "test"]), help="Split (default: test)"),
        click.option("--temperature", type=click.FloatRange(min=0.0), help="Sampling temperature"),
        click.option("--gumbel-scale", type=click.FloatRange(min=0.0), help="Gumbel noise scale for search"),
        click.option("--simulations", type=click.IntRange(min=1), help="Simulations per search"),
        click.option("--mask", type=click.Choice(["full", "partial"]), help="Tangram action mask mode"),
        click.option("--reward", type=click.Choice(["learned", "oracle"]), help="Terminal reward used by search"),
        click.option("--limit", type=click.IntRange(min=1), help="Evaluate only the first N instances"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _evaluate(ctx: click.Context, model: type[EvalConfig], **flags: Any) -> None:
    config = command_config(ctx, model, **flags)
    out_dir = prepare_output_dir(config.out, config.force)
    write_resolved_config(config, out_dir)
    chosen = config.methods if isinstance(config, BenchmarkConfig) else [config.method]
    tables = run_evaluation(config, chosen, out_dir, jobs=config.jobs)
    for name, frame in tables.items():
        click.echo(f"{name} ({config.split}, {config.env})")
        emit(ctx, frame.to_dict(orient="records"))


@click.command("eval")
@eval_options
@click.option("--method", type=click.Choice(METHODS), help="Policy mode (default: search)")
@run_options
@click.pass_context
def eval_command(ctx: click.Context, method: Optional[str], command_seed: Optional[int], out: Optional[str],
                 force: bool, **flags: Any) -> None:
    """Run one frozen policy mode over a split and write the report tables.

    greedy is temperature-0 sampling, sampled uses --temperature, search runs
    Gumbel MCTS with --gumbel-scale; random and guidance need no checkpoint.
    """
    _evaluate(ctx, EvalConfig, method=method, seed=command_seed, out=out, force=force or None, **flags)


@click.command()
@eval_options
@click.option("--methods", type=str, help="Comma-separated methods (default: random,greedy,search,guidance)")
@run_options
@click.pass_context
def benchmark(ctx: click.Context, methods: Optional[str], command_seed: Optional[int], out: Optional[str],
              force: bool, **flags: Any) -> None:
    """Evaluate several methods on the same instances and write one combined report."""
    chosen = [m.strip() for m in methods.split(",") if m.strip()] if methods else None
    _evaluate(ctx, BenchmarkConfig, methods=chosen, seed=command_seed, out=out, force=force or None, **flags)
