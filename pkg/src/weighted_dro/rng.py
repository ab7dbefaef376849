"""Seeded random streams.

Every stream is keyed by integers ``(seed, *keys)`` through numpy's
``SeedSequence``, so results never depend on the order in which trials,
simulations or cells are executed.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *keys: int) -> np.random.Generator:
    if seed < 0 or any(k < 0 for k in keys):
        raise ValueError("seed and stream keys must be nonnegative integers")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, keys)])))
