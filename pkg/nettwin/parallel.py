"""Order-preserving fan-out of sample-level work across processes."""
import logging
from concurrent.futures import ProcessPoolExecutor

logger = logging.getLogger(__name__)


def map_workers(func, items, workers=1, chunksize=1):
    """
    Apply `func` to every item, in order. One worker runs inline in the
    calling process; more use a process pool whose `map` keeps input order.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    workers = min(workers, len(items))
    logger.info(f"Dispatching {len(items)} jobs to {workers} worker processes")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunksize))
