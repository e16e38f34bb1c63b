"""Deterministic chunked map.

Work is split into contiguous chunks that are processed independently and
re-joined in chunk order, so the result is bit-identical for any worker
count. Workers are threads; the kernels released to them are pure functions
over immutable snapshots.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def chunked_map(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    n_chunks = min(workers, len(items))
    size = (len(items) + n_chunks - 1) // n_chunks
    chunks = [items[i : i + size] for i in range(0, len(items), size)]

    def run_chunk(chunk: Sequence[T]) -> list[R]:
        return [fn(item) for item in chunk]

    with ThreadPoolExecutor(max_workers=n_chunks) as pool:
        parts = list(pool.map(run_chunk, chunks))
    out: list[R] = []
    for part in parts:
        out.extend(part)
    return out
