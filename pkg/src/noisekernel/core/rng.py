"""Deterministic RNG contract.

All randomness in the package flows through generators created here. A
generator is fully determined by a 64-bit seed (plus an optional stream
index), so any run is reproducible from its recorded seed. Generators are
single-owner: parallel work derives one stream per worker instead of
sharing a handle.
"""

import numpy as np

__all__ = ["seed_rng", "derive_stream"]


def seed_rng(seed: int) -> np.random.Generator:
    """Create a deterministic generator from a 64-bit seed.

    Identical seeds yield identical draw streams on a given platform.
    """
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def derive_stream(seed: int, stream: int) -> np.random.Generator:
    """Derive an independent substream from (seed, stream index).

    Used to split work deterministically: candidate galleries, per-chain
    streams, and data-parallel shards each get their own index.
    """
    # Folding the stream index into a SeedSequence spawn key gives
    # independent, reproducible streams.
    ss = np.random.SeedSequence(entropy=np.uint64(seed), spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(ss))
