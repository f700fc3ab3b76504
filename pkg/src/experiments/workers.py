# src/experiments/workers.py
"""
Job pool for independent simulation points.

Job i always draws from the child stream (seed, i), so results do not depend
on the worker count or on completion order.
"""
from __future__ import annotations

import logging
import multiprocessing
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from src.utils import make_rng

logger = logging.getLogger(__name__)


def _job_worker(args: Dict[str, Any]) -> Tuple[int, Any]:
    """Module-level so it can be pickled into worker processes."""
    index = args["index"]
    rng = make_rng(args["seed"], index)
    return index, args["func"](rng=rng, **args["kwargs"])


def resolve_workers(workers: Optional[int], jobs: int) -> int:
    if workers is None:
        workers = multiprocessing.cpu_count()
    return max(1, min(int(workers), jobs))


def run_jobs(
    func: Callable[..., Any],
    job_kwargs: Sequence[Dict[str, Any]],
    seed: int,
    workers: Optional[int] = None,
) -> List[Any]:
    """Call func(rng=..., **kwargs) per job; results come back in job order."""
    payload = [
        {"func": func, "index": i, "seed": int(seed), "kwargs": dict(kwargs)}
        for i, kwargs in enumerate(job_kwargs)
    ]
    if not payload:
        return []
    n_workers = resolve_workers(workers, len(payload))
    logger.info("run_jobs: %d jobs on %d worker(s), seed=%d", len(payload), n_workers, seed)

    if n_workers == 1:
        results = [_job_worker(args) for args in payload]
    else:
        with multiprocessing.Pool(n_workers) as pool:
            results = list(pool.imap_unordered(_job_worker, payload))

    results.sort(key=lambda item: item[0])
    return [value for _, value in results]
