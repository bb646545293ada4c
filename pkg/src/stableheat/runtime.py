"""Deterministic batch parallelism helpers.

Batch seeds derive from one root seed via SeedSequence spawning, and batch
results are reduced in submission order, so outputs are identical for any
worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_THREADS_ENV = "STABLEHEAT_THREADS"


def default_threads() -> int:
    value = os.environ.get(_THREADS_ENV, "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def parallel_map(fn, items, threads: int | None = None) -> list:
    """Map preserving order; thread pool only when threads > 1."""
    threads = default_threads() if threads is None else max(1, int(threads))
    items = list(items)
    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def batch_rngs(seed: int, n_batches: int) -> list[np.random.Generator]:
    """Independent per-batch generators, reproducible from the root seed."""
    seq = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(s)) for s in seq.spawn(n_batches)]
