"""Deterministic block-parallel helper.

Work is split into fixed-size index blocks (a partition that does NOT depend
on the thread count), each block writes only its own output slice, and
per-block floating-point evaluation order is identical whether blocks run
serially or on a thread pool.  Results are therefore bitwise independent of
`threads`.
"""

from concurrent.futures import ThreadPoolExecutor

BLOCK = 8192


def run_blocks(n_items: int, fn, threads: int = 1, block: int = BLOCK) -> None:
    """Call fn(start, stop) over a fixed partition of range(n_items)."""
    ranges = [(s, min(s + block, n_items)) for s in range(0, n_items, block)]
    if threads <= 1 or len(ranges) <= 1:
        for lo, hi in ranges:
            fn(lo, hi)
        return
    with ThreadPoolExecutor(max_workers=threads) as ex:
        # list() forces completion and re-raises worker exceptions
        list(ex.map(lambda r: fn(r[0], r[1]), ranges))
