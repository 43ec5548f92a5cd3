"""Deterministic seed derivation.

All randomness flows from one master seed through SeedSequence paths, so any
component can be re-drawn in isolation and whole runs replay bit for bit.
Streams use the counter-based Philox generator.
"""

import numpy as np

# role ids for seed paths
ROLE_BOUNDARY = 1
ROLE_GP = 2
ROLE_SPLIT = 3
ROLE_COLLOCATION = 4
ROLE_INIT = 5
ROLE_SHUFFLE = 6
ROLE_POOL = 7


def derive(master, *path):
    """A stable uint64 child seed for (master, *path)."""
    ss = np.random.SeedSequence(entropy=[int(master), *[int(p) for p in path]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng(master, *path):
    return np.random.Generator(np.random.Philox(derive(master, *path)))
