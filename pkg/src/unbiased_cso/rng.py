"""Named, non-overlapping random streams derived from a master seed."""

from __future__ import annotations

import zlib
from typing import Hashable

import numpy as np


def _key_word(part: Hashable) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream key parts must be non-negative, got {part}")
        return int(part)
    # stable across processes, unlike hash()
    return zlib.crc32(str(part).encode()) | (1 << 32)


def stream_id(rng: np.random.Generator) -> tuple:
    """Identify the seed sequence a generator was built from."""
    seq = getattr(rng.bit_generator, "seed_seq", None)
    if isinstance(seq, np.random.SeedSequence):
        return (seq.entropy, tuple(seq.spawn_key))
    return ("unseeded",)


class StreamRegistry:
    """Hands out one generator per named key.

    Keys are tuples such as ``("estimate", r, s)``; each becomes the spawn key
    of a :class:`numpy.random.SeedSequence` rooted at the master seed, so
    distinct keys give statistically independent streams. With
    ``debug=True`` a repeated key raises instead of silently reusing a stream.
    """

    def __init__(self, master_seed: int, debug: bool = False):
        self.master_seed = int(master_seed)
        self.debug = debug
        self._issued: set[tuple] = set()

    def seed_sequence(self, *key: Hashable) -> np.random.SeedSequence:
        words = tuple(_key_word(part) for part in key)
        if self.debug:
            if words in self._issued:
                raise RuntimeError(f"random stream {key!r} requested twice")
            self._issued.add(words)
        return np.random.SeedSequence(self.master_seed, spawn_key=words)

    def generator(self, *key: Hashable) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence(*key)))

    @property
    def issued(self) -> int:
        return len(self._issued)


def generator(seed: int | np.random.SeedSequence, *key: Hashable) -> np.random.Generator:
    """Shortcut for a one-off keyed generator."""
    if isinstance(seed, np.random.SeedSequence):
        seq = np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key + tuple(_key_word(k) for k in key))
    else:
        seq = np.random.SeedSequence(int(seed), spawn_key=tuple(_key_word(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))
