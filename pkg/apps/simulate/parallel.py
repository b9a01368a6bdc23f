"""
Ordered fan-out of path blocks over a thread pool.

Blocks are fixed ranges of path indices whose size does not depend on the
worker count, and results are gathered in block order.
"""
import logging
from concurrent.futures import ThreadPoolExecutor

from django.conf import settings

logger = logging.getLogger(__name__)


def default_threads():
    return max(1, int(settings.MVLDP['THREADS']))


def path_blocks(count, block_size=None):
    block_size = block_size or settings.MVLDP['BLOCK_SIZE']
    return [range(start, min(start + block_size, count)) for start in range(0, count, block_size)]


def ordered_map(fn, items, threads=None):
    items = list(items)
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug("fan-out blocks=%d threads=%d", len(items), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
