"""SVG rendering command."""

import logging
from typing import Optional

import click

from ...lib.config import RenderConfig, prepare_output_dir, write_resolved_config
from ...services.export import ExportService, load_render_items
from ..options import command_config, emit, run_options

logger = logging.getLogger("compose_mcts.cli.render")


@click.command()
@click.option("--input", "-i", "input_path", type=str, help="Dataset split (.json) or episode log (.jsonl)")
@click.option("--env", type=click.Choice(["rect", "tangram"]), help="Environment of the input (default: rect)")
@click.option("--limit", type=click.IntRange(min=1), help="Render at most N items (default: 20)")
@run_options
@click.pass_context
def render(
    ctx: click.Context,
    input_path: Optional[str],
    env: Optional[str],
    limit: Optional[int],
    command_seed: Optional[int],
    out: Optional[str],
    force: bool,
) -> None:
    """Render configurations or episode end states to SVG.

    Rectangle items also show their goal region as a dashed box.

    Examples:

        compose-mcts render --input data/test.json --limit 5 --out svg
        compose-mcts render --input reports/episodes_search.jsonl --out svg_search
    """
    config = command_config(
        ctx, RenderConfig, input=input_path, env=env, limit=limit, seed=command_seed, out=out, force=force or None
    )
    items = load_render_items(config.input, config.env, config.limit)
    out_dir = prepare_output_dir(config.out, config.force)
    write_resolved_config(config, out_dir)
    results = ExportService(out_dir).export_all(items)
    emit(ctx, {"rendered": len(results), "out": str(out_dir)})
