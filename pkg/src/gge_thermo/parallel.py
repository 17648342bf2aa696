"""Ordered thread-pool map capped by ``GGE_THERMO_THREADS``."""
import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    raw = os.environ.get("GGE_THERMO_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def pmap(fn, items, workers=None):
    """``list(map(fn, items))``, possibly threaded; results keep input order."""
    items = list(items)
    n = worker_count() if workers is None else max(1, int(workers))
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
