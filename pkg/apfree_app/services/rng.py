"""
Counter-based random streams.

Every randomized operation draws from an explicit (seed, stream id) pair so that
runs replay bit-for-bit regardless of evaluation order or thread count.
"""
import numpy as np


def stream(seed, *counter):
    """Return a Generator on the Philox stream keyed by seed and counter ids."""
    if seed is None:
        raise ValueError("seed is required for randomized operations")
    key = tuple(int(c) for c in counter)
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(sequence))
