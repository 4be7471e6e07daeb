"""Writes experiment artifacts (CSV tables, JSON documents, metrics text) to an output directory.

All writes of a run go through one :class:`ArtifactWriter`, retry transient ``OSError``s and
record success or failure metrics. Floats are rendered with a fixed number of significant
digits so that identical inputs yield byte-identical files.
"""

import csv
import json
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from exciton_lab import config_shared
from exciton_lab.errors import LabValidationError
from exciton_lab.utils.metrics import record_artifact_metrics
from exciton_lab.utils.setup_logger import setup_logger
from exciton_lab.utils.types import ArtifactKind

logger = setup_logger(__name__)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays, paths and non-finite floats into JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if np.isnan(number):
            return "nan"
        if np.isinf(number):
            return "inf" if number > 0 else "-inf"
        return number
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value") and isinstance(value.value, str):
        return value.value
    return value


class ArtifactWriter:
    """Routes artifacts of one run into ``output_dir`` by format."""

    def __init__(self, output_dir: str | Path, digits: int | None = None) -> None:
        """Initialize the writer.

        Args:
            output_dir (str | Path): Directory receiving the artifacts.
            digits (int | None): Significant digits for CSV floats (defaults to config).

        """
        self.output_dir = Path(output_dir)
        self.digits = digits or config_shared.get_csv_significant_digits()
        self.written: list[str] = []

    def prepare(self) -> None:
        """Create the output directory.

        Raises:
            LabValidationError: If the directory cannot be created.

        """
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise LabValidationError(f"cannot create {self.output_dir}: {e}") from e

    def format_value(self, value: Any) -> str:
        if value is None:
            return ""
        if isinstance(value, (bool, np.bool_)):
            return str(bool(value)).lower()
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            return format(float(value), f".{self.digits}g")
        return str(value)

    def write(self, name: str, payload: Any, kind: ArtifactKind) -> Path:
        """Write one artifact and remember its name.

        Args:
            name (str): File name inside the output directory.
            payload (Any): ``(header, rows)`` for CSV, a JSON-compatible object, or text.
            kind (ArtifactKind): Output format.

        Returns:
            Path: Path of the written file.

        Raises:
            OSError: If the write still fails after retries.

        """
        writer = self._get_writer(kind)
        path = self.output_dir / name
        try:
            writer(path, payload)
        except OSError as e:
            logger.error("❌ Failed to write %s: %s", path, e)
            record_artifact_metrics(kind.value, success=False)
            raise
        record_artifact_metrics(kind.value, success=True)
        if name not in self.written:
            self.written.append(name)
        logger.debug("📝 Wrote %s", path)
        return path

    def write_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        return self.write(name, (header, rows), ArtifactKind.CSV)

    def write_json(self, name: str, payload: Any) -> Path:
        return self.write(name, payload, ArtifactKind.JSON)

    def write_text(self, name: str, text: str) -> Path:
        return self.write(name, text, ArtifactKind.TEXT)

    def _get_writer(self, kind: ArtifactKind) -> Callable[[Path, Any], None]:
        return {
            ArtifactKind.CSV: self._write_csv,
            ArtifactKind.JSON: self._write_json,
            ArtifactKind.TEXT: self._write_text,
        }[kind]

    @retry(
        stop=stop_after_attempt(3),
        wait=wait_exponential(multiplier=1, min=1, max=10),
        retry=retry_if_exception_type(OSError),
        reraise=True,
    )
    def _write_csv(
        self, path: Path, payload: tuple[Sequence[str], Sequence[Sequence[Any]]]
    ) -> None:
        header, rows = payload
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([self.format_value(v) for v in row])

    @retry(
        stop=stop_after_attempt(3),
        wait=wait_exponential(multiplier=1, min=1, max=10),
        retry=retry_if_exception_type(OSError),
        reraise=True,
    )
    def _write_json(self, path: Path, payload: Any) -> None:
        path.write_text(json.dumps(to_jsonable(payload), indent=2) + "\n", encoding="utf-8")

    @retry(
        stop=stop_after_attempt(3),
        wait=wait_exponential(multiplier=1, min=1, max=10),
        retry=retry_if_exception_type(OSError),
        reraise=True,
    )
    def _write_text(self, path: Path, payload: str) -> None:
        path.write_text(payload, encoding="utf-8")


__all__ = ["ArtifactWriter", "to_jsonable"]
