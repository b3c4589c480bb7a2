"""Fan independent replications out over worker processes."""

from __future__ import annotations

import os
from typing import Callable, Optional, Sequence


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None or threads <= 0:
        return os.cpu_count() or 1
    return threads


def map_tasks(fn: Callable, tasks: Sequence, threads: Optional[int] = 1) -> list:
    """``[fn(t) for t in tasks]``, in order, optionally across processes.

    Results come back in task order, so reductions do not depend on
    scheduling.
    """
    workers = min(resolve_threads(threads), len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=workers)(delayed(fn)(t) for t in tasks)
