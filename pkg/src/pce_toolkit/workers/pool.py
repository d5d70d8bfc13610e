from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

from pce_toolkit.errors import ParameterError

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], *, workers: int = 1) -> list[R]:
    """Apply `fn` to every item and return results in input order.

    Output never depends on `workers`; numpy kernels release the GIL, so
    threads give real speed-up for the encoder and OMP loops.
    """

    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers}", module="workers")
    seq: Sequence[T] = list(items)
    if workers == 1 or len(seq) <= 1:
        return [fn(item) for item in seq]
    with ThreadPoolExecutor(max_workers=min(workers, len(seq))) as executor:
        return list(executor.map(fn, seq))
