from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

import numpy as np
from tqdm import tqdm

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    threads: int = 1,
    desc: Optional[str] = None,
) -> List[R]:
    """Map fn over items keeping input order; results do not depend on the thread count."""
    items = list(items)
    bar = tqdm(total=len(items), unit="item", desc=f"  {desc}", leave=False) if desc else None
    try:
        if threads <= 1 or len(items) <= 1:
            results = []
            for item in items:
                results.append(fn(item))
                if bar:
                    bar.update(1)
            return results

        def tracked(item):
            result = fn(item)
            if bar:
                bar.update(1)
            return result

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(tracked, items))
    finally:
        if bar:
            bar.close()


def chunk_rows(count: int, threads: int) -> List[np.ndarray]:
    """Split row indices 0..count into at most `threads` contiguous chunks."""
    if count == 0:
        return []
    return [c for c in np.array_split(np.arange(count), max(1, min(threads, count))) if len(c)]


def map_row_chunks(fn: Callable[[np.ndarray], Sequence], count: int, threads: int = 1) -> List:
    return parallel_map(fn, chunk_rows(count, threads), threads)
