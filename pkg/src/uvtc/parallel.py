"""Deterministic worker-pool helper.

Results are collected in submission order, so parallel and serial runs
accumulate identically.
"""

from concurrent.futures import ThreadPoolExecutor


def ordered_map(fn, items, threads=1):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
