"""Thread-pool map capped by ``SCGLUE_THREADS``."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
U = TypeVar("U")


def thread_count() -> int:
    env = os.environ.get("SCGLUE_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"SCGLUE_THREADS must be an integer, got {env!r}") from None
        return max(1, n)
    return max(1, os.cpu_count() or 1)


def parallel_map(fn: Callable[[T], U], items: Iterable[T]) -> list[U]:
    """``[fn(x) for x in items]`` in input order, on up to ``thread_count()`` threads."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
