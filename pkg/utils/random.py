"""Seeded random streams.

All randomness goes through ``numpy.random.Generator`` over the counter-based
Philox bit generator. Independent substreams come from ``Generator.spawn``,
so a fixed seed reproduces every restart, candidate and replication.
"""
import numpy as np

RandomSource = np.random.Generator | int | None


def make_rng(seed: RandomSource = None) -> np.random.Generator:
    """Build a Philox generator from a seed, or pass an existing generator through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn(rng: RandomSource, n: int) -> list[np.random.Generator]:
    """Return ``n`` independent child generators, indexed by position."""
    return make_rng(rng).spawn(n)
