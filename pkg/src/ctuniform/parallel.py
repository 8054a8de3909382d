"""Order-preserving parallel map over independent per-volume work.

Threads only ever split work across volumes; nothing inside a single
volume's computation depends on thread count, and results come back in
input order, so outputs are byte-identical for any --threads value.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from .errors import ConfigError


def parallel_map(fn, items, threads=1):
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    items = list(items)
    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
