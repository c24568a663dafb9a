"""compose-mcts CLI main entry point."""

from .cli.main import main

if __name__ == '__main__':
    main()
