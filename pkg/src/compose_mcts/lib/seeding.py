"""Counter-based seeding so parallel sections stay deterministic."""

import numpy as np


def task_rng(seed: int, *counters: int) -> np.random.Generator:
    """Generator for the task identified by ``(seed, *counters)``.

    Independent of scheduling order: the same key always yields the same stream.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, counters)]))


def task_seeds(seed: int, count: int, *prefix: int) -> list[int]:
    """Integer seeds for ``count`` sibling tasks."""
    seq = np.random.SeedSequence([int(seed), *map(int, prefix)])
    return [int(child.generate_state(1)[0]) for child in seq.spawn(count)]
