"""CLI commands package."""

from . import dataset, evaluate, render, tangram, train

__all__ = ["dataset", "evaluate", "render", "tangram", "train"]
