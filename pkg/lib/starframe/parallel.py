"""Column-block scheduling shared by the column-parallel kernels."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Tuple


def _env_int(name: str, default: int) -> int:
    try:
        v = (os.getenv(name) or "").strip()
        return int(v) if v else default
    except Exception:
        return default


def thread_count() -> int:
    """STARFRAME_THREADS: 0 (default) runs sequentially."""
    return max(0, _env_int("STARFRAME_THREADS", 0))


def column_chunk() -> int:
    return max(1, _env_int("STARFRAME_COLUMN_CHUNK", 64))


def column_blocks(n_points: int, chunk: int | None = None) -> List[Tuple[int, int]]:
    """
    Fixed partition of column indices into [c0, c1) blocks.
    The partition depends only on n_points and chunk, never on the thread count,
    so results are bitwise identical however the blocks are scheduled.
    """
    width = chunk or column_chunk()
    return [(c0, min(c0 + width, n_points)) for c0 in range(0, n_points, width)]


def run_blocks(
    work: Callable[[int, int], None],
    blocks: List[Tuple[int, int]],
    threads: int | None = None,
) -> None:
    """Run work(c0, c1) for every block; blocks must write disjoint columns."""
    n_threads = thread_count() if threads is None else threads
    if n_threads <= 1 or len(blocks) <= 1:
        for c0, c1 in blocks:
            work(c0, c1)
        return
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        futures = [pool.submit(work, c0, c1) for c0, c1 in blocks]
        for fut in futures:
            fut.result()
