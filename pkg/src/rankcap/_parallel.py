"""Worker-count control for draw-parallel estimation.

RANKCAP_THREADS caps the thread pool; unset means serial. Results are always
reduced by draw index, so the output is identical at any parallelism level.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "RANKCAP_THREADS"


def worker_count():
    raw = os.environ.get(ENV_VAR)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{ENV_VAR} must be >= 1, got {value}")
    return value


def map_indexed(fn, count):
    """[fn(0), ..., fn(count-1)], threaded when RANKCAP_THREADS > 1."""
    workers = worker_count()
    if workers == 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))
