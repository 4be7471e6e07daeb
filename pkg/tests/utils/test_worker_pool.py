from functools import partial

import pytest
from prometheus_client import REGISTRY

from exciton_lab.utils.metrics import record_integration_metrics
from exciton_lab.utils.worker_pool import parallel_map


def test_serial_map_preserves_order():
    assert parallel_map(lambda x: x * x, [3, 1, 2], max_workers=1) == [9, 1, 4]


def test_pooled_map_preserves_order():
    assert parallel_map(abs, [-3, -1, 2, -7], max_workers=2) == [3, 1, 2, 7]


def test_empty_input():
    assert parallel_map(abs, [], max_workers=4) == []


def test_single_job_runs_inline():
    # lambdas cannot be pickled, so this only passes on the in-process path
    assert parallel_map(lambda x: x + 1, [1], max_workers=8) == [2]


def test_job_errors_propagate():
    def fail(_):
        raise ValueError("bad job")

    with pytest.raises(ValueError, match="bad job"):
        parallel_map(fail, [1, 2], max_workers=1)


def test_pooled_integration_metrics_reach_the_parent_registry():
    def sample(name, labels):
        return REGISTRY.get_sample_value(name, labels) or 0.0

    evaluations = sample("integration_rhs_evaluations_total", {"method": "pool-test"})
    runs = sample("integration_runs_total", {"status": "success"})
    job = partial(record_integration_metrics, "pool-test", True, 0.25)
    assert parallel_map(job, [1, 2, 3], max_workers=2) == [None, None, None]
    assert sample("integration_rhs_evaluations_total", {"method": "pool-test"}) == evaluations + 6
    assert sample("integration_runs_total", {"status": "success"}) == runs + 3
