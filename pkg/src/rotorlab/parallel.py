"""Trial-level parallelism over fixed chunks.

Chunk boundaries depend only on the trial count, and every trial draws from
its own substream, so results do not depend on the thread count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

T = TypeVar("T")

_threads: int | None = None
CHUNKS = 64


def set_threads(n: int | None) -> None:
    global _threads
    if n is not None and n < 1:
        raise ValueError("thread count must be positive")
    _threads = n


def threads() -> int:
    return _threads or os.cpu_count() or 1


def chunk_bounds(trials: int) -> list[tuple[int, int]]:
    k = min(CHUNKS, max(trials, 1))
    edges = [trials * i // k for i in range(k + 1)]
    return [(lo, hi) for lo, hi in zip(edges, edges[1:]) if hi > lo]


def map_chunks(fn: Callable[[int, int], T], trials: int) -> list[T]:
    """Apply ``fn(lo, hi)`` to every chunk; results come back in chunk order."""
    bounds = chunk_bounds(trials)
    n = threads()
    if n == 1 or len(bounds) == 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))
