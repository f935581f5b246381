"""Seed derivation helpers.

Every source of randomness in a run is a PCG64 generator keyed by the master
seed plus a purpose tag (and, where relevant, round and client ids). Purposes
get disjoint streams, so adding or removing draws in one subsystem never
shifts the randomness seen by another. That is what makes e.g. a run with the
adaptive-aggregation hook disabled bit-reproduce a plain FedAvg run.
"""

from __future__ import annotations

import numpy as np

# Purpose tags. Values are arbitrary but frozen: changing them changes
# every seeded run.
PURPOSE_DATA = 1
PURPOSE_PARTITION = 2
PURPOSE_SPLIT = 3
PURPOSE_MODEL_INIT = 4
PURPOSE_CLIENT_SAMPLING = 5
PURPOSE_TRAIN_SHUFFLE = 6
PURPOSE_FINETUNE = 7
PURPOSE_ALA = 8


def spawn_rng(*keys: int) -> np.random.Generator:
    """Generator deterministically keyed by the given non-negative ints."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))


def derive_seed(*keys: int) -> int:
    """64-bit seed deterministically derived from the given keys."""
    seq = np.random.SeedSequence([int(k) for k in keys])
    return int(seq.generate_state(1, dtype=np.uint64)[0])
