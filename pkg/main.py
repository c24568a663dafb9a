"""Main entry point for compose-mcts."""

from src.compose_mcts.cli import main

if __name__ == "__main__":
    main()
