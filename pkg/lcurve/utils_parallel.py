from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from tqdm import tqdm

from .logger import progress_enabled

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(fn: Callable[[T], R], items: Iterable[T], threads: int=1, desc: str=None) -> list[R]:
    """
    Apply fn to every item, on up to `threads` worker threads.

    Results come back in input order whatever the completion order, so reductions over
    them are identical for any thread count.
    """
    items = list(items)
    show = desc is not None and progress_enabled()
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(item) for item in tqdm(items, desc=desc, disable=not show, leave=False)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(tqdm(pool.map(fn, items), total=len(items), desc=desc, disable=not show, leave=False))
