"""Deterministic chunked parallelism.

Work is split into contiguous chunks, mapped on a thread pool, and merged in
submission order, so results are byte-identical for any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

__all__ = ["ordered_chunk_map", "chunk_slices"]


def chunk_slices(n: int, n_chunks: int) -> list[slice]:
    n_chunks = max(1, min(n_chunks, n)) if n > 0 else 1
    bounds = [round(i * n / n_chunks) for i in range(n_chunks + 1)]
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def ordered_chunk_map(
    fn: Callable[[T], R], chunks: Sequence[T], n_threads: int = 1
) -> list[R]:
    """Map fn over chunks; results come back in input order regardless of threads."""
    if n_threads <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        futures = [pool.submit(fn, c) for c in chunks]
        return [f.result() for f in futures]
