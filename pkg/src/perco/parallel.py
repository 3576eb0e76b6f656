"""Replica-level worker pool.

Replicas are independent pure functions of their index, so the pool only
changes wall time: results are always returned in replica order.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("PERCO_THREADS", "1") or 1)
    return max(1, int(threads))


def map_replicas(fn, replicas: int, threads: int | None = None) -> list:
    """``[fn(0), ..., fn(replicas - 1)]``, evaluated on up to ``threads`` workers."""
    workers = min(worker_count(threads), max(1, replicas))
    if workers == 1:
        return [fn(r) for r in range(replicas)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(replicas)))
