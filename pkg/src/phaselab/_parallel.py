"""Worker-count resolution and chunked enumeration of complementary subset pairs.

Chunk boundaries are fixed independently of the number of workers, so every
chunk is evaluated with exactly the same floating-point operations no matter
how the chunks are scheduled.  Reductions are then taken over chunk results in
chunk order, which makes results bit-identical across worker counts.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

ENV_THREADS = "PHASELAB_THREADS"
CHUNK = 4096


class BudgetExceeded(RuntimeError):
    """Raised when an exhaustive enumeration exceeds its configured budget."""


def resolve_workers(workers=None):
    if workers is None:
        env = os.environ.get(ENV_THREADS)
        workers = int(env) if env else (os.cpu_count() or 1)
    workers = int(workers)
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    return workers


def pair_masks(N, start, stop):
    """Boolean membership masks for subsets ``S`` containing index 0.

    Subset number ``k`` contains index ``j >= 1`` iff bit ``j - 1`` of ``k`` is
    set.  Ranging ``k`` over ``[0, 2**(N-1))`` visits each unordered pair
    ``{S, S^c}`` exactly once.
    """
    k = np.arange(start, stop, dtype=np.int64)
    masks = np.empty((k.size, N), dtype=bool)
    masks[:, 0] = True
    if N > 1:
        bits = np.arange(N - 1, dtype=np.int64)
        masks[:, 1:] = (k[:, None] >> bits) & 1
    return masks


def map_pair_chunks(fn, N, workers=None):
    """Apply ``fn(masks, offset)`` to every chunk of complementary pairs.

    Returns the list of results in chunk order.
    """
    total = 1 << (N - 1)
    bounds = [(a, min(a + CHUNK, total)) for a in range(0, total, CHUNK)]

    def run(bound):
        a, b = bound
        return fn(pair_masks(N, a, b), a)

    workers = resolve_workers(workers)
    if workers == 1 or len(bounds) == 1:
        return [run(b) for b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, bounds))


def check_budget(N, budget, what):
    if N > budget:
        raise BudgetExceeded(
            f"{what} enumerates 2^{N - 1} subset pairs for N={N}; "
            f"budget allows N <= {budget}"
        )


def lexicographic_min(masks):
    """Index of the row whose sorted member tuple is lexicographically smallest."""
    keys = [tuple(np.flatnonzero(m)) for m in masks]
    return min(range(len(keys)), key=keys.__getitem__)
