"""Seed expansion and per-record random substreams.

Layout (frozen; changing it changes every synthetic table):

* A 64-bit seed becomes a Philox-4x64 key via ``SeedSequence(seed).generate_state(2, uint64)``.
* Record ``r`` owns the counter blocks ``[r * B, (r + 1) * B)`` where
  ``B = ceil(width / 4)`` and ``width`` is the number of draws per record
  (one per node, in topological order, for ancestral sampling; one per
  column for the copula). Each counter block yields four 64-bit words.
* Word ``w`` becomes the uniform ``((w >> 11) + 0.5) / 2**53``, which lies
  strictly inside (0, 1).

Because record ``r``'s words depend only on (key, r), any partition of the
records across workers reproduces the same table.

Per-method seeds in a pipeline run come from :func:`derive_seed`, which mixes
the global seed with the SHA-256 of the method label through ``SeedSequence``.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

_WORDS_PER_BLOCK = 4
_MAX_SEED = 2**64 - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def philox_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(check_seed(seed)).generate_state(2, np.uint64)


def derive_seed(seed: int, *labels: str) -> int:
    """Independent 64-bit child seed for a named sub-task."""
    spawn_key = tuple(
        int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:4], "little") for label in labels
    )
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=spawn_key)
    return int(ss.generate_state(1, np.uint64)[0])


def record_uniforms(seed: int, start: int, stop: int, width: int) -> np.ndarray:
    """Uniforms of shape ``(stop - start, width)`` for records ``start..stop-1``."""
    blocks = -(-width // _WORDS_PER_BLOCK)
    stride = blocks * _WORDS_PER_BLOCK
    bitgen = np.random.Philox(key=philox_key(seed))
    if start:
        bitgen.advance(start * blocks)
    words = bitgen.random_raw((stop - start) * stride).reshape(stop - start, stride)[:, :width]
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def chunk_bounds(n_rows: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(int(workers), n_rows))
    edges = np.linspace(0, n_rows, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def map_row_chunks(
    fn: Callable[[int, int], np.ndarray], n_rows: int, workers: int = 1
) -> np.ndarray:
    """Apply ``fn(start, stop)`` over row chunks and stack the results in row order."""
    bounds = chunk_bounds(n_rows, workers)
    if len(bounds) <= 1:
        return fn(0, n_rows)
    with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
        parts = list(pool.map(lambda b: fn(*b), bounds))
    return np.concatenate(parts, axis=0)


def generator(seed: int) -> np.random.Generator:
    """Plain generator for non-row-structured noise (privacy mechanisms, permutations)."""
    return np.random.Generator(np.random.Philox(key=philox_key(seed)))
