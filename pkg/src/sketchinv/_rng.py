"""Seeded random streams.

All randomness goes through numpy's Philox counter-based bit generator so a
stream is fully determined by its integer seed.
"""

import numpy as np

RNG_ALGORITHM = "numpy.random.Philox"


def make_rng(seed):
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.Philox(seed))
