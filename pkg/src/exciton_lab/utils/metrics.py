"""Prometheus metric definitions for numerical runs.

Exports counters and histograms for:
- Master-equation integrations
- Dephasing sweep points
- Experiment runs
- Artifact writes
"""

import re
from collections.abc import Iterator
from contextlib import contextmanager

from prometheus_client import REGISTRY, Counter, Histogram, generate_latest


def get_prometheus_metrics() -> str:
    """Return all registered Prometheus metrics as a text payload."""
    return generate_latest(REGISTRY).decode("utf-8")


def _sanitize_label(value: str) -> str:
    """Sanitize a string to be Prometheus-compatible label.

    Args:
        value (str): The input string to sanitize.

    Returns:
        str: Sanitized label safe for Prometheus use.

    """
    return re.sub(r"[^\w\-:.]", "_", value)[:64]


# -----------------------------
# Integration Metrics
# -----------------------------
integration_counter = Counter(
    "integration_runs_total",
    "Total number of master-equation integrations by status.",
    ["status"],
)

integration_rhs_evaluations = Counter(
    "integration_rhs_evaluations_total",
    "Total number of generator applications performed by the integrator.",
    ["method"],
)

integration_duration = Histogram(
    "integration_duration_seconds",
    "Wall time of master-equation integrations by method.",
    ["method"],
    buckets=[0.001, 0.01, 0.1, 0.5, 1, 5, 30],
)


IntegrationRecord = tuple[str, bool, float, int]

_pending: list[IntegrationRecord] | None = None


@contextmanager
def buffered_integration_metrics() -> Iterator[list[IntegrationRecord]]:
    """Collect integration measurements in a list instead of the registry.

    Worker processes have their own registry, so pooled jobs buffer their measurements and
    the parent replays them with :func:`replay_integration_metrics`.
    """
    global _pending
    previous, _pending = _pending, []
    try:
        yield _pending
    finally:
        _pending = previous


def record_integration_metrics(
    method: str, success: bool, duration_sec: float, rhs_evaluations: int = 0
) -> None:
    if _pending is not None:
        _pending.append((method, success, duration_sec, rhs_evaluations))
        return
    method = _sanitize_label(method)
    integration_counter.labels(status="success" if success else "failure").inc()
    integration_rhs_evaluations.labels(method=method).inc(rhs_evaluations)
    integration_duration.labels(method=method).observe(duration_sec)


def replay_integration_metrics(records: list[IntegrationRecord]) -> None:
    for record in records:
        record_integration_metrics(*record)


# -----------------------------
# Sweep Metrics
# -----------------------------
sweep_points_counter = Counter(
    "sweep_points_total",
    "Total number of dephasing sweep points evaluated by sweep kind.",
    ["kind"],
)


def record_sweep_metrics(kind: str, points: int) -> None:
    sweep_points_counter.labels(kind=_sanitize_label(kind)).inc(points)


# -----------------------------
# Experiment Metrics
# -----------------------------
experiment_counter = Counter(
    "experiment_runs_total",
    "Total number of experiment runs by kind and status.",
    ["experiment", "status"],
)

experiment_duration = Histogram(
    "experiment_duration_seconds",
    "Wall time of experiment runs by kind.",
    ["experiment"],
    buckets=[0.1, 1, 5, 30, 60, 120, 600],
)


def record_experiment_metrics(experiment: str, status: str, duration_sec: float) -> None:
    experiment = _sanitize_label(experiment)
    experiment_counter.labels(experiment=experiment, status=_sanitize_label(status)).inc()
    experiment_duration.labels(experiment=experiment).observe(duration_sec)


# -----------------------------
# Artifact Metrics
# -----------------------------
artifact_counter = Counter(
    "artifact_writes_total",
    "Total number of artifact files written by kind.",
    ["kind"],
)

artifact_failures = Counter(
    "artifact_write_failures_total",
    "Total number of failed artifact writes by kind.",
    ["kind"],
)


def record_artifact_metrics(kind: str, success: bool) -> None:
    kind = _sanitize_label(kind)
    if success:
        artifact_counter.labels(kind=kind).inc()
    else:
        artifact_failures.labels(kind=kind).inc()
