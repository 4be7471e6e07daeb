"""Order-preserving parallel map over independent numerical jobs."""

from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import TypeVar

from exciton_lab import config_shared
from exciton_lab.utils.metrics import (
    IntegrationRecord,
    buffered_integration_metrics,
    replay_integration_metrics,
)
from exciton_lab.utils.setup_logger import setup_logger

logger = setup_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def _measured(func: Callable[[T], R], job: T) -> tuple[R, list[IntegrationRecord]]:
    with buffered_integration_metrics() as records:
        result = func(job)
    return result, records


def parallel_map(
    func: Callable[[T], R], items: Iterable[T], max_workers: int | None = None
) -> list[R]:
    """Apply ``func`` to every item, returning results in input order.

    Jobs run in a process pool when more than one worker and more than one item are
    available, otherwise in the calling process. ``func`` and the items must be picklable
    for the pooled path. Integration metrics recorded inside workers are returned with each
    result and recorded in the calling process. The first exception raised by a job
    propagates to the caller.

    Args:
        func (Callable[[T], R]): Pure job function.
        items (Iterable[T]): Job inputs.
        max_workers (int | None): Pool size; defaults to MAX_WORKERS config.

    Returns:
        list[R]: One result per item, in input order.

    """
    jobs = list(items)
    workers = config_shared.get_max_workers() if max_workers is None else max_workers
    workers = min(workers, len(jobs))

    if workers <= 1:
        return [func(job) for job in jobs]

    logger.debug("🧵 Dispatching %d jobs to %d worker processes", len(jobs), workers)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        outcomes = list(executor.map(partial(_measured, func), jobs))
    for _, records in outcomes:
        replay_integration_metrics(records)
    return [result for result, _ in outcomes]
