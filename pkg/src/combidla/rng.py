"""Deterministic random streams.

Each replica draws from its own Philox stream keyed by (master seed, replica
index), so results do not depend on the order in which replicas run.
"""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 20240601


def stream(seed: int = DEFAULT_SEED, replica: int = 0, *extra: int) -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, int(replica), *map(int, extra)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def streams(seed: int, count: int, *extra: int) -> list[np.random.Generator]:
    return [stream(seed, i, *extra) for i in range(count)]
