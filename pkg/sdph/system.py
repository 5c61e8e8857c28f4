"""system
Runtime services shared by the pipeline stages.

threadCount()
    Thread cap, read from SDPH_THREADS

parallelMap(func, items)
    Order-preserving map over a capped thread pool

rngStreams(seed, n)
    Independent random generators spawned from one master seed
"""

from concurrent.futures import ThreadPoolExecutor
import os
from typing import (
    Callable as function,
    Iterable,
    List,
    Optional,
    TypeVar,
)

import numpy as np

from . import builtin

T = TypeVar('T')
R = TypeVar('R')

THREADS_VAR = 'SDPH_THREADS'


def threadCount() -> int:
    """Returns the number of worker threads to use.
    SDPH_THREADS caps it; otherwise the CPU count is used.
    """
    value = os.environ.get(THREADS_VAR)
    if value is None or value.strip() == '':
        return os.cpu_count() or 1
    try:
        count = int(value)
    except ValueError:
        raise builtin.ConfigError(f"expected an integer, got {value!r}", THREADS_VAR)
    if count < 1:
        raise builtin.ConfigError(f"expected an integer >= 1, got {count}", THREADS_VAR)
    return count


def parallelMap(func: function[[T], R], items: Iterable[T],
                threads: Optional[int] = None) -> List[R]:
    """Applies func to every item; results come back in input order
    whatever the scheduling.
    """
    items = list(items)
    workers = min(threads or threadCount(), max(len(items), 1))
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def rngStreams(seed: int, n: int) -> List[np.random.Generator]:
    """Returns n independent generators derived from seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.default_rng(child) for child in children]


def childSeed(rng: np.random.Generator) -> int:
    """Draws a seed for a routine that takes an integer seed."""
    return int(rng.integers(0, 2**31 - 1))
