"""compose-mcts: planning compositional assemblies with Gumbel MCTS and learned rewards."""

__version__ = "0.1.0"
