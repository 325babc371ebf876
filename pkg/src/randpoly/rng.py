"""Reproducible random streams and chunked parallel replication.

Streams come from the Philox counter-based generator keyed by a SeedSequence
built from ``(seed, task_index)``. Replications are cut into fixed-size chunks
and chunk ``i`` always draws from stream ``(seed, i)``, so pooled results do
not depend on how many workers execute the chunks.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np

CHUNK = 1000
THREADS_ENV = "RANDPOLY_THREADS"


def stream(seed: int, task: int = 0) -> np.random.Generator:
    if int(seed) != seed or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    if task < 0:
        raise ValueError("task index must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(task)])))


def derive_seed(seed: int, *keys: int) -> int:
    """A fresh seed for an independent family of streams labelled by ``keys``."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1, np.uint64)[0])


def as_generator(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return stream(seed_or_rng)


def worker_count(threads: Optional[int] = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
        else:
            threads = min(os.cpu_count() or 1, 8)
    if threads < 1:
        raise ValueError("worker count must be at least 1")
    return threads


def run_chunks(
    task: Callable[[np.random.Generator, int], np.ndarray],
    reps: int,
    seed: int,
    threads: Optional[int] = None,
    chunk: int = CHUNK,
) -> np.ndarray:
    """Run ``task(rng, size)`` over ``reps`` replications split into chunks.

    Each call returns an array whose leading axis has length ``size``; the
    chunk outputs are concatenated in chunk order.
    """
    sizes = [min(chunk, reps - start) for start in range(0, reps, chunk)]
    jobs = [(i, s) for i, s in enumerate(sizes)]

    def one(job):
        i, size = job
        return np.asarray(task(stream(seed, i), size))

    workers = min(worker_count(threads), len(jobs))
    if workers <= 1:
        parts = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, jobs))
    return np.concatenate(parts, axis=0)
