"""Config resolution and option helpers shared by the CLI commands."""

from typing import Any, Callable, TypeVar

import click

from ..lib.config import RunConfig, resolve_config

RunConfigT = TypeVar("RunConfigT", bound=RunConfig)


def command_config(ctx: click.Context, model: type[RunConfigT], **flags: Any) -> RunConfigT:
    """Resolve a run config: environment defaults < config file < global flags < command flags.

    Flags that were not given (``None``) do not override; commands pass switches
    as ``flag or None`` so an unset switch keeps the file setting.
    """
    config = ctx.obj["config_instance"]
    settings = {**config.run_defaults(), **config.command_settings}
    overrides = {"seed": ctx.obj.get("seed"), "jobs": ctx.obj.get("jobs")}
    overrides.update({k: v for k, v in flags.items() if v is not None})
    return resolve_config(model, settings, overrides)


def run_options(func: Callable) -> Callable:
    """``--seed``, ``--out`` and ``--force`` shared by every command."""
    func = click.option("--force", is_flag=True, help="Overwrite an existing output")(func)
    func = click.option("--out", "-o", type=str, help="Output path")(func)
    func = click.option("--seed", "command_seed", type=int, help="Seed for this command")(func)
    return func


def emit(ctx: click.Context, data: Any) -> None:
    click.echo(ctx.obj["format_output"](data, ctx.obj["output_format"]))
