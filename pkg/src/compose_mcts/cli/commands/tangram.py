"""Tangram action-table precomputation and goal dataset commands."""

import logging
from pathlib import Path
from typing import Optional

import click

from ...envs.action_table import precompute_action_table, save_action_table
from ...envs.rect_dataset import SPLITS
from ...envs.tangram import gen_tangram_goals
from ...lib.config import PrecomputeConfig, TangramGoalsConfig, prepare_output_dir, write_resolved_config
from ...lib.exceptions import DataError
from ...lib.seeding import task_seeds
from ...services.file_handler import FileHandler, save_tangram_goals
from ..options import command_config, emit, run_options

logger = logging.getLogger("compose_mcts.cli.tangram")


@click.command("precompute-tangram")
@run_options
@click.pass_context
def precompute_tangram(ctx: click.Context, command_seed: Optional[int], out: Optional[str], force: bool) -> None:
    """Enumerate the tangram action table and store it as JSON.

    The table is deterministic, so rerunning rewrites an identical file.
    """
    config = command_config(ctx, PrecomputeConfig, seed=command_seed, out=out, force=force or None)
    target = Path(config.out)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataError(f"Cannot create {target.parent}: {e}") from e
    table = precompute_action_table()
    save_action_table(table, target)
    write_resolved_config(config, target.parent, f"{target.stem}.config.json")
    logger.info(f"Action table with {table.size} entries written to {target}")
    emit(ctx, {"actions": table.size, "path": str(target), "sha256": table.digest()})


@click.command("gen-tangram")
@click.option("--actions", type=str, help="Precomputed action table (default: tangram_actions.json)")
@click.option("--train", "n_train", type=click.IntRange(min=0), help="Training goals (default: 200)")
@click.option("--val", "n_val", type=click.IntRange(min=0), help="Validation goals (default: 20)")
@click.option("--test", "n_test", type=click.IntRange(min=0), help="Test goals (default: 50)")
@click.option("--resolution", type=click.IntRange(min=8), help="Goal mask resolution (default: 64)")
@run_options
@click.pass_context
def gen_tangram(
    ctx: click.Context,
    actions: Optional[str],
    n_train: Optional[int],
    n_val: Optional[int],
    n_test: Optional[int],
    resolution: Optional[int],
    command_seed: Optional[int],
    out: Optional[str],
    force: bool,
) -> None:
    """Generate tangram goal silhouettes from random complete assemblies."""
    config = command_config(
        ctx, TangramGoalsConfig,
        actions=actions, train=n_train, val=n_val, test=n_test, resolution=resolution,
        seed=command_seed, out=out, force=force or None,
    )
    table = FileHandler(config.out, config.actions).action_table()
    out_dir = prepare_output_dir(config.out, config.force)
    write_resolved_config(config, out_dir)

    counts = {"train": config.train, "val": config.val, "test": config.test}
    seeds = task_seeds(config.seed, len(SPLITS))
    summary = []
    for split, seed in zip(SPLITS, seeds):
        goals = gen_tangram_goals(table, counts[split], seed, prefix=split, resolution=config.resolution)
        save_tangram_goals(goals, out_dir / f"{split}.json")
        summary.append({"split": split, "goals": len(goals)})
    emit(ctx, summary)
