"""Deterministic RNG derivation.

Every random choice in the package is drawn from a generator derived from
(seed, *tags), so results do not depend on call order or scheduling.
"""

import zlib

import numpy as np


def _entropy(seed, tags):
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ent = [int(seed)]
    for tag in tags:
        if isinstance(tag, str):
            ent.append(zlib.crc32(tag.encode("utf-8")))
        else:
            ent.append(int(tag))
    return ent


def seed_sequence(seed, *tags):
    return np.random.SeedSequence(_entropy(seed, tags))


def derive_rng(seed, *tags):
    """A numpy Generator whose stream depends only on (seed, tags)."""
    return np.random.default_rng(seed_sequence(seed, *tags))


def derive_uint64(seed, *tags):
    """A 64-bit value usable to seed compiled kernels."""
    return int(seed_sequence(seed, *tags).generate_state(1, np.uint64)[0])
