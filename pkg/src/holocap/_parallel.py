"""Seeded random streams and a deterministic worker pool.

Work is cut into fixed-size blocks.  Block ``b`` always draws from the stream
``(seed, tag, b)``, so the output does not depend on how many workers ran it.
"""
from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

BLOCK_SIZE = 4096

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    env = os.environ.get("HOLOCAP_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def stream(seed: int, tag: str, *index: int) -> np.random.Generator:
    key = (zlib.crc32(tag.encode()),) + tuple(int(i) for i in index)
    ss = np.random.SeedSequence(entropy=int(seed) % 2**64, spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


def blocks(n: int, size: int = BLOCK_SIZE) -> list[tuple[int, int, int]]:
    """``(block_index, start, stop)`` triples covering ``range(n)``."""
    return [(b, s, min(s + size, n)) for b, s in enumerate(range(0, n, size))]


def pmap(fn: Callable[[T], R], items: Sequence[T] | Iterable[T], workers: int | None = None) -> list[R]:
    items = list(items)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
