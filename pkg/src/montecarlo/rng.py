"""Per-path random streams.

Every path draws from its own Philox (counter-based) stream keyed by (seed, path_index),
so results do not depend on how paths are spread over workers.
"""

import numpy as np

CHUNK_SIZE = 1000


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    """Independent generator for one simulated path."""
    if seed < 0 or path_index < 0:
        raise ValueError(f"seed and path index must be nonnegative, got {seed}, {path_index}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, path_index))))


def chunks(n_paths: int, size: int = CHUNK_SIZE) -> list[range]:
    """Split path indices into fixed-size ranges; the split never depends on the worker count."""
    return [range(start, min(start + size, n_paths)) for start in range(0, n_paths, size)]
