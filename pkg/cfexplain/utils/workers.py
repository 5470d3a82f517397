"""Worker-pool sizing and fan-out for independent realizations."""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

import psutil

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    """Physical core count, falling back to logical cores, then 1."""
    count = psutil.cpu_count(logical=False) or psutil.cpu_count(logical=True)
    return max(1, count or 1)


def resolve_workers(workers: Optional[int]) -> int:
    if workers is None or workers <= 0:
        return default_workers()
    return workers


def fan_out(func: Callable[[T], R], tasks: Iterable[T], workers: Optional[int] = 1) -> List[R]:
    """Map ``func`` over ``tasks``, in-process for one worker, else in a process pool.

    Results come back in task order; every task carries its own seed, so the
    output does not depend on the worker count.
    """
    tasks = list(tasks)
    workers = min(resolve_workers(workers), max(1, len(tasks)))
    if workers == 1:
        return [func(task) for task in tasks]
    logger.info("running %d tasks on %d workers", len(tasks), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))
