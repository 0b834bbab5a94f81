"""Deterministic named random streams for simulation runs."""

import hashlib
from typing import Dict, Tuple

import numpy as np


def _name_key(name: str) -> int:
    """Map a stream name to a stable 32-bit integer."""
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


class RandomStreams:
    """Factory of independent generators keyed by purpose and optional ids.

    Every stream is derived from the run seed and its own spawn key, so adding
    draws to one stream never shifts the values produced by another one.
    """

    def __init__(self, seed: int):
        """Initialize the stream factory.

        Args:
            seed: Run seed (non-negative 64-bit integer)
        """
        if seed < 0:
            raise ValueError(f"Seed must be non-negative, got {seed}")
        self.seed = int(seed)
        self._cache: Dict[Tuple[int, ...], np.random.Generator] = {}

    def fresh(self, name: str, *ids: int) -> np.random.Generator:
        """Create a new generator for a stream, starting from its first draw.

        Args:
            name: Purpose of the stream (e.g. "routes", "channel")
            *ids: Optional integer qualifiers (vehicle id, link endpoints, ...)

        Returns:
            A numpy Generator seeded only by (seed, name, ids)
        """
        spawn_key = (_name_key(name),) + tuple(int(i) for i in ids)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=spawn_key)
        return np.random.default_rng(sequence)

    def get(self, name: str, *ids: int) -> np.random.Generator:
        """Return the shared generator of a stream, creating it on first use."""
        key = (_name_key(name),) + tuple(int(i) for i in ids)
        generator = self._cache.get(key)
        if generator is None:
            generator = self.fresh(name, *ids)
            self._cache[key] = generator
        return generator
