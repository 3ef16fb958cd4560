"""Counter-based random streams with explicit seed threading.

Every stochastic consumer derives its own Philox (4x64, counter-based) stream
from a root seed plus a tuple of stream tags. Streams are independent and
reproducible bit for bit, so shot batches, Monte Carlo draws and training
batches never share or race a global generator.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _tag_to_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & _MASK64
    if isinstance(tag, str):
        return zlib.crc32(tag.encode("utf-8"))
    raise TypeError(f"stream tag must be int or str, got {type(tag).__name__}")


def spawn_rng(seed: int, *tags) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, *tags)``."""
    entropy = (int(seed) & _MASK64,) + tuple(_tag_to_int(t) for t in tags)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def as_rng(seed_or_rng, *tags) -> np.random.Generator:
    """Accept either a ready Generator or a seed to spawn one from."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return spawn_rng(seed_or_rng, *tags)


def hash_seed(seed: int, *tags) -> int:
    """Stable 63-bit sub-seed from a root seed and mixed-type tags.

    Unlike spawn_rng this returns a plain int, for call sites that must hand
    an integer seed to another seed-taking API rather than a Generator.
    """
    acc = int(seed) & ((1 << 63) - 1)
    for t in tags:
        acc = zlib.crc32(repr(t).encode(), acc & 0xFFFFFFFF) ^ (acc << 7)
        acc &= (1 << 63) - 1
    return acc
