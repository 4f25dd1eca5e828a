"""Worker-pool helper for embarrassingly parallel replicate loops."""

import functools
from concurrent.futures import ProcessPoolExecutor


def map_indices(fn, n, jobs, *args):
    """[fn(i, *args) for i in range(n)], optionally across processes.

    fn must be a module-level callable when jobs > 1.  Results come back
    in index order, so aggregation is independent of scheduling.
    """
    if jobs is None or jobs <= 1 or n <= 1:
        return [fn(i, *args) for i in range(n)]
    bound = functools.partial(_call, fn, args)
    chunk = max(1, n // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(bound, range(n), chunksize=chunk))


def _call(fn, args, i):
    return fn(i, *args)
