"""Ordered parallel map used by grid scans."""
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor


def parallel_map(fn, items, workers=1):
    """list(map(fn, items)), optionally over a process pool; order is preserved.

    Workers are started with 'spawn' so that they never inherit threaded
    BLAS state from the parent process.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(min(workers, len(items)), mp_context=mp.get_context("spawn")) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
