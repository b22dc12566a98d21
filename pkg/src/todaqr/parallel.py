"""Order-preserving trial map over a process pool."""
from concurrent.futures import ProcessPoolExecutor


def map_trials(func, items, workers=1, chunksize=None):
    """``[func(x) for x in items]``, optionally across ``workers`` processes.

    Results always come back in input order, so any reduction over them is
    independent of the schedule.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) < 2:
        return [func(x) for x in items]
    if chunksize is None:
        chunksize = max(1, len(items) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunksize))
