"""
Ordered worker pool behind the --threads setting
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(func: Callable[[T], R], tasks: Iterable[T], threads: int = 1) -> List[R]:
    """Map func over tasks, returning results in task order.

    Results never depend on ``threads``: every task carries its own random
    stream key, and the reduction happens on the ordered list.
    """
    tasks = list(tasks)
    if threads <= 1 or len(tasks) <= 1:
        return [func(task) for task in tasks]

    workers = min(threads, len(tasks))
    logger.debug("Dispatching %d tasks to %d workers", len(tasks), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))
