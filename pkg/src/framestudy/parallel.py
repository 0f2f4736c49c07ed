"""Order-preserving parallel map with an environment-bounded worker count."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "FRAMESTUDY_THREADS"


def thread_count() -> int:
    raw = os.environ.get(ENV_THREADS)
    if raw is not None and raw != "":
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{ENV_THREADS} must be an integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"{ENV_THREADS} must be >= 1, got {n}")
        return n
    return min(8, os.cpu_count() or 1)


def parallel_map(fn, items, max_workers: int | None = None) -> list:
    """Apply fn to each item, returning results in input order.

    Work units must not depend on shared mutable state; every caller in this
    package derives per-item RNG streams, so results match the serial path.
    """
    items = list(items)
    workers = max_workers if max_workers is not None else thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
