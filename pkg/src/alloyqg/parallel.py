"""Ordered parallel map with single-threaded BLAS inside each task."""
from concurrent.futures import ThreadPoolExecutor

from threadpoolctl import threadpool_limits


def ordered_map(fn, items, threads: int = 1) -> list:
    items = list(items)
    with threadpool_limits(limits=1):
        if threads <= 1:
            return [fn(i) for i in items]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
