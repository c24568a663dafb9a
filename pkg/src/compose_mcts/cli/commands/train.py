"""Adversarial training command."""

import logging
from typing import Optional

import click

from ...lib.config import prepare_output_dir, write_resolved_config
from ...services.file_handler import FileHandler
from ...services.trainer import AdversarialTrainer, TrainRunConfig
from ..options import command_config, emit, run_options

logger = logging.getLogger("compose_mcts.cli.train")


@click.command()
@click.option("--env", type=click.Choice(["rect", "tangram"]), help="Environment (default: rect)")
@click.option("--data", type=str, help="Dataset directory with train.json (and val.json)")
@click.option("--actions", type=str, help="Tangram action table")
@click.option("--iterations", type=click.IntRange(min=1), help="Training iterations (default: 20)")
@click.option("--episodes", type=click.IntRange(min=1), help="Self-play episodes per iteration (default: 64)")
@click.option("--operator", type=click.Choice(["muzero", "ppo"]), help="Policy improvement operator")
@click.option("--lam", type=click.FloatRange(min=0.0), help="Weight of the contrastive reward loss")
@click.option("--no-ga", is_flag=True, help="Disable adversarial reward refinement")
@click.option("--no-pretrain", is_flag=True, help="Skip contrastive reward pretraining")
@click.option("--mask", type=click.Choice(["full", "partial"]), help="Tangram action mask mode")
@click.option("--reward-source", type=click.Choice(["learned", "oracle"]), help="Terminal reward used by search")
@click.option("--gumbel-scale", type=click.FloatRange(min=0.0), help="Gumbel noise scale at the root")
@click.option("--simulations", type=click.IntRange(min=1), help="Simulations per search")
@click.option("--num-sampled", type=click.IntRange(min=1), help="Root actions sampled by Gumbel-Top-k")
@click.option("--bc-epochs", type=click.IntRange(min=0), help="Behaviour cloning epochs on dataset solutions")
@click.option("--resume", is_flag=True, help="Continue from the newest valid checkpoint in --out")
@run_options
@click.pass_context
def train(
    ctx: click.Context,
    env: Optional[str],
    data: Optional[str],
    actions: Optional[str],
    iterations: Optional[int],
    episodes: Optional[int],
    operator: Optional[str],
    lam: Optional[float],
    no_ga: bool,
    no_pretrain: bool,
    mask: Optional[str],
    reward_source: Optional[str],
    gumbel_scale: Optional[float],
    simulations: Optional[int],
    num_sampled: Optional[int],
    bc_epochs: Optional[int],
    resume: bool,
    command_seed: Optional[int],
    out: Optional[str],
    force: bool,
) -> None:
    """Train the policy/value and reward networks with adversarial self-play.

    The run directory receives config.json, checkpoints/NNN.json,
    reports.jsonl and trajectories/NNN.jsonl.

    Examples:

        # "w/o GA" ablation with a smaller search budget
        compose-mcts train --data data --no-ga --simulations 32 --out runs/no_ga

        # PPO improvement operator on tangram with the partial mask
        compose-mcts train --env tangram --data goals --actions tangram_actions.json --operator ppo --mask partial
    """
    file_search = dict(ctx.obj["config_instance"].command_settings.get("search", {}))
    search_flags = {"gumbel_scale": gumbel_scale, "num_simulations": simulations, "num_sampled": num_sampled}
    search = {**file_search, **{k: v for k, v in search_flags.items() if v is not None}}
    config = command_config(
        ctx, TrainRunConfig,
        env=env, data=data, actions=actions, iterations=iterations, episodes_per_iteration=episodes,
        operator=operator, lam=lam, mask_mode=mask, reward_source=reward_source, bc_epochs=bc_epochs,
        use_adversarial=False if no_ga else None,
        pretrain_reward=False if no_pretrain else None,
        search=search or None,
        resume=resume or None, seed=command_seed, out=out, force=force or None,
    )
    run_dir = prepare_output_dir(config.out, config.force or config.resume)
    write_resolved_config(config, run_dir)

    handler = FileHandler(config.data, config.actions)
    environment = handler.build_env(config.env, config.mask_mode)
    train_tasks = handler.load_tasks(config.env, "train")
    val_tasks = handler.load_tasks(config.env, "val") if handler.has_split("val") else None
    logger.info(
        f"Training on {len(train_tasks)} {config.env} tasks: operator {config.operator.value}, "
        f"adversarial {config.use_adversarial}, {config.jobs} worker(s)"
    )

    trainer = AdversarialTrainer(config, environment, train_tasks, val_tasks, run_dir=run_dir, jobs=config.jobs)
    result = trainer.train(resume=config.resume)
    summary = {
        "run_dir": str(run_dir),
        "iterations": result.iterations_completed,
        "stopped_early": result.stopped_early,
    }
    if result.reports:
        last = result.reports[-1]
        summary.update({
            "mean_terminal_reward": round(last.mean_terminal_reward, 4),
            "validity_rate": round(last.validity_rate, 4),
            "reward_auc": None if last.reward_auc is None else round(last.reward_auc, 4),
        })
    emit(ctx, summary)
