"""CLI package for compose-mcts."""

from .main import cli, main

__all__ = ["main", "cli"]
