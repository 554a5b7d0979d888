from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar
import os

import numpy as np

T = TypeVar('T')
R = TypeVar('R')

THREADS_ENVIRONMENT_VARIABLE = 'TEMPORA_THREADS'


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        from_env = os.environ.get(THREADS_ENVIRONMENT_VARIABLE)
        if from_env:
            try:
                threads = int(from_env)
            except ValueError:
                raise ValueError(
                    f'{THREADS_ENVIRONMENT_VARIABLE} must be an integer but was {from_env!r}')
        else:
            threads = os.cpu_count() or 1

    if threads < 1:
        raise ValueError(f'threads must be at least 1 but was {threads}')
    return threads


def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: Optional[int] = 1) -> List[R]:
    """
    Map over items on a thread pool, returning results in input order so
    that reductions over them are independent of the thread count
    """
    items = list(items)
    threads = resolve_threads(threads)
    if threads == 1 or len(items) < 2:
        return [func(item) for item in items]

    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(func, items))


def spawn_generators(rng: np.random.Generator, n: int) -> List[np.random.Generator]:
    # one draw from the parent stream, regardless of n's partitioning
    root = np.random.SeedSequence(int(rng.integers(0, 2 ** 63 - 1)))
    return [np.random.default_rng(child) for child in root.spawn(n)]
