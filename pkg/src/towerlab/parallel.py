"""Deterministic fan-out of batch tasks over a process pool.

Tasks are pure functions of their arguments (every batch carries its own
derived stream id), results are merged in task order, so output is identical
for any worker count.  workers <= 1 runs inline.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def resolve_workers(requested=None, env_var: str = "TOWERLAB_WORKERS") -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(env_var)
    if env:
        return max(1, int(env))
    return 1


def run_batches(fn, tasks, workers: int = 1):
    tasks = list(tasks)
    workers = max(1, int(workers))
    if workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
