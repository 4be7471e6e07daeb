from prometheus_client import REGISTRY

from exciton_lab.utils.metrics import (
    _sanitize_label,
    buffered_integration_metrics,
    get_prometheus_metrics,
    record_artifact_metrics,
    record_experiment_metrics,
    record_integration_metrics,
    record_sweep_metrics,
    replay_integration_metrics,
)


def sample(name, labels):
    return REGISTRY.get_sample_value(name, labels) or 0.0


def test_sanitize_label():
    assert _sanitize_label("a b/c") == "a_b_c"
    assert len(_sanitize_label("x" * 100)) == 64


def test_experiment_metrics():
    labels = {"experiment": "scaling", "status": "ok"}
    before = sample("experiment_runs_total", labels)
    record_experiment_metrics("scaling", "ok", 0.5)
    assert sample("experiment_runs_total", labels) == before + 1


def test_integration_metrics_count_rhs_evaluations():
    before = sample("integration_rhs_evaluations_total", {"method": "DOP853"})
    failures = sample("integration_runs_total", {"status": "failure"})
    record_integration_metrics("DOP853", False, 0.01, rhs_evaluations=40)
    assert sample("integration_rhs_evaluations_total", {"method": "DOP853"}) == before + 40
    assert sample("integration_runs_total", {"status": "failure"}) == failures + 1


def test_sweep_and_artifact_metrics():
    points = sample("sweep_points_total", {"kind": "uniform"})
    failed = sample("artifact_write_failures_total", {"kind": "csv"})
    record_sweep_metrics("uniform", 12)
    record_artifact_metrics("csv", success=False)
    assert sample("sweep_points_total", {"kind": "uniform"}) == points + 12
    assert sample("artifact_write_failures_total", {"kind": "csv"}) == failed + 1


def test_exposition_text():
    record_sweep_metrics("disorder", 1)
    assert "sweep_points_total" in get_prometheus_metrics()


def test_buffered_integration_metrics_skip_the_registry_until_replayed():
    labels = {"method": "buffered"}
    before = sample("integration_rhs_evaluations_total", labels)
    with buffered_integration_metrics() as records:
        record_integration_metrics("buffered", True, 0.1, rhs_evaluations=7)
    assert records == [("buffered", True, 0.1, 7)]
    assert sample("integration_rhs_evaluations_total", labels) == before
    replay_integration_metrics(records)
    assert sample("integration_rhs_evaluations_total", labels) == before + 7
