"""
Index-ordered parallel map.

Results are written into a preallocated list by input index, so the output
order never depends on completion order.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from src.utils.logging import get_logger

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: Optional[int]) -> int:
    """
    Resolve a worker count.

    Args:
        threads: Requested worker count (None or 0 for all cores)

    Returns:
        Positive worker count
    """
    if not threads or threads <= 0:
        return os.cpu_count() or 1
    return threads


def ordered_map(
    func: Callable[[T], R], items: Sequence[T], threads: Optional[int] = None
) -> List[R]:
    """
    Apply ``func`` to every item with a bounded thread pool.

    Args:
        func: Pure function applied to each item
        items: Inputs
        threads: Maximum number of workers (None or 0 for all cores)

    Returns:
        Results in input order

    Raises:
        Exception: The first failure, in input order
    """
    workers = min(resolve_threads(threads), max(len(items), 1))
    results: List[Optional[R]] = [None] * len(items)

    if workers == 1:
        for index, item in enumerate(items):
            results[index] = func(item)
        return results  # type: ignore[return-value]

    logger.debug("Mapping %d items over %d threads", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(func, item) for item in items]
        for index, future in enumerate(futures):
            results[index] = future.result()
    return results  # type: ignore[return-value]
