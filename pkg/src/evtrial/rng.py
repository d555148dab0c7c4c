"""Deterministic stream derivation for parallel Monte Carlo.

Every random quantity in the package flows from an explicit master seed
through ``stream_generator(master_seed, tag, index)``. Tags separate
calibration from evaluation and experiments from each other; the index
enumerates fixed-size replication chunks, so results do not depend on how
chunks are assigned to workers.
"""

from __future__ import annotations

import hashlib

import numpy as np

CHUNK = 8192


def _tag64(tag: str) -> int:
    return int.from_bytes(hashlib.blake2s(tag.encode(), digest_size=8).digest(), "big")


def stream_generator(master_seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """Counter-based generator for one (experiment, chunk) stream."""
    ss = np.random.SeedSequence((int(master_seed), _tag64(tag), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(total: int, chunk: int = CHUNK) -> list[int]:
    """Fixed partition of ``total`` replications into chunks."""
    out = [chunk] * (total // chunk)
    if total % chunk:
        out.append(total % chunk)
    return out


def bernoulli_block(
    rng: np.random.Generator, reps: int, n: int, p: float
) -> np.ndarray:
    """(reps, n) int8 Bernoulli(p) draws."""
    return (rng.random((reps, n)) < p).astype(np.int8)
