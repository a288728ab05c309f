"""
Counter-based random streams keyed by purpose and grid position
"""

from typing import Sequence

import numpy as np

# stream purposes, part of every key
Z_TABLE = 1
DFGLS_TABLE = 2
ALPHA1_TABLE = 3
HARNESS = 4
DGP = 5
THRESHOLD = 6

BLOCK_SIZE = 1000


def stream(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for (seed, key); independent of call order"""
    spawn_key = tuple(int(k) for k in key)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=spawn_key)))


def blocks(reps: int, block_size: int = BLOCK_SIZE) -> Sequence[tuple]:
    """Split a replication count into (block index, size) pairs"""
    out = []
    start = 0
    index = 0
    while start < reps:
        size = min(block_size, reps - start)
        out.append((index, size))
        start += size
        index += 1
    return out
