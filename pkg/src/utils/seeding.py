"""
Deterministic seed derivation.
Per-episode seeds are hashed from (global seed, episode id) so that serial
and sharded runs draw the same random numbers for the same episode.
"""

import json
import hashlib

import numpy as np


def derive_seed(seed: int, key: str) -> int:
    """
    Stable 64-bit seed for `key` under a global seed.

    Args:
        seed: Global seed
        key: Unit-of-work identifier (episode id)

    Returns:
        Unsigned 64-bit integer
    """
    key_data = {"seed": int(seed), "key": str(key)}
    digest = hashlib.sha256(json.dumps(key_data, sort_keys=True).encode("utf-8")).hexdigest()
    return int(digest[:16], 16)


def episode_rng(seed: int, key: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, key))
