import csv
import json
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from exciton_lab.errors import LabValidationError
from exciton_lab.output_handler import ArtifactWriter, to_jsonable
from exciton_lab.utils.types import ArtifactKind, Verdict

pytestmark = pytest.mark.unit


@pytest.fixture
def writer(tmp_path):
    artifact_writer = ArtifactWriter(tmp_path / "run", digits=6)
    artifact_writer.prepare()
    return artifact_writer


def test_prepare_creates_nested_directory(tmp_path):
    target = tmp_path / "a" / "b"
    ArtifactWriter(target).prepare()
    assert target.is_dir()


def test_prepare_reports_unusable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(LabValidationError, match="cannot create"):
        ArtifactWriter(blocker / "sub").prepare()


def test_csv_formatting(writer):
    path = writer.write_csv(
        "table.csv", ["n", "value", "flag"], [[1, 1.0 / 3.0, True], [np.int64(2), np.nan, None]]
    )
    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows == [["n", "value", "flag"], ["1", "0.333333", "true"], ["2", "nan", ""]]
    assert writer.written == ["table.csv"]


def test_default_digits_round_trip_floats(tmp_path):
    artifact_writer = ArtifactWriter(tmp_path)
    assert artifact_writer.digits == 17
    assert float(artifact_writer.format_value(0.1 + 0.2)) == 0.1 + 0.2


def test_json_is_sanitized(writer):
    payload = {
        "array": np.array([1.0, 2.0]),
        "missing": float("nan"),
        "big": np.float64(np.inf),
        "verdict": Verdict.CLASSICAL,
        "path": Path("results/x"),
    }
    path = writer.write_json("doc.json", payload)
    loaded = json.loads(path.read_text())
    assert loaded == {
        "array": [1.0, 2.0],
        "missing": "nan",
        "big": "inf",
        "verdict": "classical",
        "path": "results/x",
    }


def test_to_jsonable_keeps_plain_values():
    assert to_jsonable({1: (True, np.int32(4), "s")}) == {"1": [True, 4, "s"]}
    assert to_jsonable(-np.inf) == "-inf"


def test_text_and_written_list(writer):
    writer.write_text("metrics.prom", "a 1\n")
    writer.write_text("metrics.prom", "a 2\n")
    writer.write(ArtifactKind.JSON.value + ".json", {}, ArtifactKind.JSON)
    assert (writer.output_dir / "metrics.prom").read_text() == "a 2\n"
    assert writer.written == ["metrics.prom", "json.json"]


@patch("time.sleep")
@patch("exciton_lab.output_handler.record_artifact_metrics")
def test_transient_write_failure_is_retried(mock_metrics, mock_sleep, writer):
    with patch.object(Path, "write_text", side_effect=[OSError("busy"), None]) as mock_write:
        writer.write_text("notes.txt", "hello")
    assert mock_write.call_count == 2
    assert writer.written == ["notes.txt"]
    mock_metrics.assert_called_once_with("text", success=True)


@patch("time.sleep")
@patch("exciton_lab.output_handler.record_artifact_metrics")
def test_persistent_write_failure_is_raised(mock_metrics, mock_sleep, writer):
    with patch.object(Path, "write_text", side_effect=OSError("read-only")) as mock_write:
        with pytest.raises(OSError, match="read-only"):
            writer.write_json("doc.json", {})
    assert mock_write.call_count == 3
    assert writer.written == []
    mock_metrics.assert_called_once_with("json", success=False)
