"""
Deterministic random streams derived from a master seed.

A stream is identified by the master seed, a fixed purpose id and any
number of indices (slot, user, cluster...). The mixing function is numpy's
``SeedSequence`` over the integer tuple, so a slot's randomness does not
depend on which worker renders it or in what order.
"""

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    CLUSTERS = 1
    CHANNEL = 2
    REFERENCE = 3
    DATA = 4
    CALIBRATION = 5
    SCAN = 6
    ANALOG = 7
    PAYLOAD = 8
    PLACEMENT = 9


def seed_sequence(master_seed: int, stream: int, *indices: int) -> np.random.SeedSequence:
    if master_seed < 0:
        raise ValueError("master seed must be non-negative")
    return np.random.SeedSequence([int(master_seed), int(stream), *(int(i) for i in indices)])


def stream_rng(master_seed: int, stream: int, *indices: int) -> np.random.Generator:
    """Generator for one (master, stream, indices) key."""
    return np.random.default_rng(seed_sequence(master_seed, stream, *indices))


def child_seed(master_seed: int, stream: int, *indices: int) -> int:
    """64-bit integer seed for APIs that take a plain seed."""
    return int(seed_sequence(master_seed, stream, *indices).generate_state(1, np.uint64)[0])
