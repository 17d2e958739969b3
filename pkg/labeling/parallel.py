"""Order-preserving, bounded fan-out over a process pool."""

from collections import deque
from concurrent.futures import ProcessPoolExecutor
import os


def default_jobs():
    return os.cpu_count() or 1


def ordered_map(func, items, jobs=1, initializer=None, initargs=(), window=8):
    """
    Yield ``func(item)`` for every item, in input order.

    With ``jobs > 1`` the calls run in worker processes, with at most
    ``jobs * window`` items in flight so large inputs stream instead of
    being materialized.
    """
    if jobs is None or jobs <= 1:
        if initializer is not None:
            initializer(*initargs)
        for item in items:
            yield func(item)
        return

    limit = max(1, jobs * window)
    pending = deque()
    with ProcessPoolExecutor(max_workers=jobs, initializer=initializer, initargs=initargs) as pool:
        for item in items:
            pending.append(pool.submit(func, item))
            if len(pending) >= limit:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()
