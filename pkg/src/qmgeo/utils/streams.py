"""
Seeded random streams.

All randomness in qmgeo is drawn from ``numpy.random.Generator`` objects
derived from a master seed plus an integer path (purpose, round, client,
block...).  Two streams with the same path are bit-identical; streams with
different paths are statistically independent.  Evaluation order therefore
never changes results.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..constants import STREAM_BLOCK_SIZE

# Purpose tags (first element of every derived path)
PURPOSE_INIT = 0
PURPOSE_BATCH = 1
PURPOSE_QUANTIZE = 2
PURPOSE_DATA = 3
PURPOSE_PCA = 4


def derive_seed(master_seed: int, *path: int) -> np.random.SeedSequence:
    """Return the ``SeedSequence`` for *path* under *master_seed*."""
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(p) for p in path))


def derive_stream(master_seed: int, *path: int) -> np.random.Generator:
    """Return an independent generator for *path* under *master_seed*."""
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, *path)))


def child_stream(seed_seq: np.random.SeedSequence, *path: int) -> np.random.Generator:
    """Derive a generator one level below an existing ``SeedSequence``."""
    key = tuple(seed_seq.spawn_key) + tuple(int(p) for p in path)
    child = np.random.SeedSequence(entropy=seed_seq.entropy, spawn_key=key)
    return np.random.Generator(np.random.PCG64(child))


def element_uniforms(seed_seq: np.random.SeedSequence, n: int) -> np.ndarray:
    """Uniform draws in [0, 1) for elements ``0..n-1`` under the block rule."""
    if n == 0:
        return np.empty(0, dtype=float)
    n_blocks = -(-n // STREAM_BLOCK_SIZE)
    chunks = [child_stream(seed_seq, b).random(STREAM_BLOCK_SIZE) for b in range(n_blocks)]
    return np.concatenate(chunks)[:n]


def uniforms_for_indices(seed_seq: np.random.SeedSequence, indices: Sequence[int]) -> np.ndarray:
    """Uniform draws for an arbitrary set of element indices (any order)."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        return np.empty(0, dtype=float)
    blocks = {}
    out = np.empty(idx.size, dtype=float)
    for k, i in enumerate(idx):
        b, off = divmod(int(i), STREAM_BLOCK_SIZE)
        if b not in blocks:
            blocks[b] = child_stream(seed_seq, b).random(STREAM_BLOCK_SIZE)
        out[k] = blocks[b][off]
    return out
