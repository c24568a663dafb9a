"""Rectangle dataset generation command."""

import logging
from collections import Counter
from pathlib import Path
from typing import Optional

import click

from ...envs.rect_dataset import gen_dataset, save_split
from ...lib.config import GenRectConfig, prepare_output_dir, write_resolved_config
from ..options import command_config, emit, run_options

logger = logging.getLogger("compose_mcts.cli.dataset")


@click.command("gen-rect")
@click.option("--train", "n_train", type=click.IntRange(min=0), help="Training configs (default: 200)")
@click.option("--val", "n_val", type=click.IntRange(min=0), help="Validation configs (default: 20)")
@click.option("--test", "n_test", type=click.IntRange(min=0), help="Test configs (default: 50)")
@click.option("--node-limit", type=click.IntRange(min=1), help="Tiler search nodes per region")
@run_options
@click.pass_context
def gen_rect(
    ctx: click.Context,
    n_train: Optional[int],
    n_val: Optional[int],
    n_test: Optional[int],
    node_limit: Optional[int],
    command_seed: Optional[int],
    out: Optional[str],
    force: bool,
) -> None:
    """Generate the rectangle composition dataset.

    Writes train.json, val.json and test.json (one solved config per entry)
    plus the resolved config.json into the output directory.

    Examples:

        compose-mcts gen-rect --train 200 --val 20 --test 50 --seed 7 --out data
    """
    config = command_config(
        ctx, GenRectConfig,
        train=n_train, val=n_val, test=n_test, node_limit=node_limit,
        seed=command_seed, out=out, force=force or None,
    )
    out_dir = prepare_output_dir(config.out, config.force)
    write_resolved_config(config, out_dir)
    logger.info(f"Generating rectangle dataset into {out_dir} (seed {config.seed})")

    dataset = gen_dataset(
        {"train": config.train, "val": config.val, "test": config.test},
        config.seed,
        max_attempts_factor=config.max_attempts_factor,
        node_limit=config.node_limit,
    )
    summary = []
    for split, configs in dataset.items():
        save_split(configs, Path(out_dir) / f"{split}.json")
        labels = Counter(c.difficulty.value for c in configs)
        summary.append({
            "split": split,
            "configs": len(configs),
            "Easy": labels.get("Easy", 0),
            "Mid": labels.get("Mid", 0),
            "Hard": labels.get("Hard", 0),
        })
    emit(ctx, summary)
