"""
Worker-pool utilities.

Suites and enumerations hand independent work items to a process pool and
merge the results by item index, so the outcome never depends on scheduling.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

import psutil

logger = logging.getLogger(__name__)

THREADS_ENV = "NILORBIT_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def available_workers(requested: Optional[int] = None) -> int:
    """Number of workers to use.

    Starts from the physical core count, then applies the NILORBIT_THREADS
    cap and the caller's request, whichever is smaller.
    """
    count = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1

    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            count = min(count, max(1, int(cap)))
        except ValueError:
            logger.warning(f"Ignoring non-integer {THREADS_ENV}={cap!r}")

    if requested is not None and requested > 0:
        count = min(count, requested)

    return max(1, count)


class WorkerPool:
    """Ordered parallel map over independent work items."""

    def __init__(self, workers: Optional[int] = None):
        self.workers = available_workers(workers)
        logger.debug(f"WorkerPool initialized with {self.workers} worker(s)")

    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
        """Apply ``fn`` to every item; results come back in item order.

        ``fn`` must be a module-level function so it can be pickled.
        """
        if self.workers <= 1 or len(items) < 2:
            return [fn(item) for item in items]

        chunksize = max(1, len(items) // (4 * self.workers))
        with ProcessPoolExecutor(max_workers=self.workers) as executor:
            return list(executor.map(fn, items, chunksize=chunksize))
