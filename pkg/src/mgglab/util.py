"""Small shared helpers."""

from concurrent.futures import ThreadPoolExecutor


def parallel_map_ordered(fn, items, threads: int = 1) -> list:
    """Map fn over items, optionally on a thread pool, preserving order.

    Every item must be a pure function of its arguments (trial purity),
    so the result is identical for any thread count.
    """
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
