"""Seed splitting and block-parallel execution.

Work of ``n`` items is cut into fixed blocks of ``block_size`` items.  Block
``b`` of stream ``s`` under master seed ``seed`` draws from
``PCG64(SeedSequence(seed, spawn_key=(s, b)))``.  Block boundaries and
streams never depend on the worker count, and callers combine block results
with integer sums, so output is identical for every ``jobs`` value.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

from .validation import check_int

R = TypeVar("R")

DEFAULT_SEED = 20060620
DEFAULT_BLOCK = 1 << 16
JOBS_ENV = "TRUNCATOR_JOBS"


def default_jobs() -> int:
    value = os.environ.get(JOBS_ENV)
    if value is None:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, block))))


def blocks(n_items: int, block_size: int = DEFAULT_BLOCK) -> list[tuple[int, int, int]]:
    """``(block_index, start, count)`` triples covering ``range(n_items)``."""
    return [(b, lo, min(block_size, n_items - lo)) for b, lo in enumerate(range(0, n_items, block_size))]


def run_map(
    func: Callable[..., R],
    arg_list: Sequence[tuple],
    jobs: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> list[R]:
    """``[func(*args) for args in arg_list]``, in order, optionally in worker processes.

    ``func`` must be a picklable module-level callable when ``jobs > 1``.
    ``progress(done, total)`` is called after each item completes.
    """
    jobs = check_int(jobs, "jobs", minimum=1)
    total = len(arg_list)
    out: list[R] = []
    if jobs == 1 or total <= 1:
        for args in arg_list:
            out.append(func(*args))
            if progress:
                progress(len(out), total)
        return out
    with ProcessPoolExecutor(max_workers=min(jobs, total)) as pool:
        futures = [pool.submit(func, *args) for args in arg_list]
        for f in futures:
            out.append(f.result())
            if progress:
                progress(len(out), total)
    return out
