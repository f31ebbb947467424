"""Optional thread fan-out for embarrassingly parallel point evaluation.

Worker count comes from the HAL_THREADS environment variable (default 1,
meaning fully sequential). Results are always returned in input order, so
output never depends on scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    raw = os.environ.get("HAL_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def map_indexed(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """Apply fn to each item, possibly on a thread pool, preserving order."""
    seq = list(items)
    n = worker_count()
    if n <= 1 or len(seq) <= 1:
        return [fn(item) for item in seq]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, seq))
