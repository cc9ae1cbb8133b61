"""Seed derivation for reproducible, shard-independent random streams.

Every stochastic step draws from ``stream(master_seed, step, block)``.  Work
is cut into fixed-size blocks (not per-worker shards), so the output does not
depend on how many workers process the blocks.
"""
from __future__ import annotations

import hashlib

import numpy as np

from .errors import ValidationError

BLOCK_SIZE = 8192


def step_key(step: str) -> int:
    digest = hashlib.sha256(step.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(master_seed: int, step: str, block: int = 0) -> np.random.Generator:
    """Generator for block ``block`` of ``step`` under ``master_seed``."""
    if master_seed is None:
        raise ValidationError("an explicit seed is required")
    seq = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, step_key(step), int(block)])
    return np.random.default_rng(seq)


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValidationError("an explicit seed is required")
    return np.random.default_rng(int(seed))


def blocks(n: int, size: int = BLOCK_SIZE) -> list[tuple[int, int, int]]:
    """Split ``range(n)`` into ``(block_index, start, stop)`` triples."""
    return [(k, lo, min(lo + size, n)) for k, lo in enumerate(range(0, n, size))]


def run_blocks(fn, n: int, workers: int = 1, size: int = BLOCK_SIZE) -> list:
    """Apply ``fn(block, start, stop)`` to every block, preserving block order."""
    jobs = blocks(n, size)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
