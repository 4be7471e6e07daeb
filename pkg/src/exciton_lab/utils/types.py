"""Shared enums, report payload shapes and validation helpers used across the laboratory."""

from enum import Enum
from typing import Any, TypedDict


class ExperimentKind(str, Enum):
    """Experiments the batch runner can dispatch."""

    TRANSPORT_SWEEP = "transport_sweep"
    SCALING = "scaling"
    FMO = "fmo"
    CHAINMAP = "chainmap"
    CLASSIFY = "classify"


class Verdict(str, Enum):
    """Outcome of a classicality test."""

    CLASSICAL = "classical"
    NON_CLASSICAL = "non-classical"
    INCONCLUSIVE = "inconclusive"


class ClassicalSetKind(str, Enum):
    """Restricted families of classical maps used for distance upper bounds."""

    RANDOM_UNITARY = "random-unitary"
    MEASURE_PREPARE = "measure-prepare"


class SpectralKind(str, Enum):
    """Shapes of bath spectral densities."""

    FLAT = "flat"
    POWER_LAW = "power_law"
    TABULATED = "tabulated"


class ArtifactKind(str, Enum):
    """File formats written by the artifact writer."""

    CSV = "csv"
    JSON = "json"
    TEXT = "text"


class VersionInfo(TypedDict):
    """Software versions echoed in every run report."""

    exciton_lab: str
    python: str
    numpy: str
    scipy: str


class RunReport(TypedDict, total=False):
    """Shape of report.json written by the batch runner."""

    status: str
    exit_code: int
    experiment: str
    config: dict[str, Any]
    versions: VersionInfo
    wall_time_seconds: float
    tolerances: dict[str, Any]
    artifacts: list[str]
    summary: dict[str, Any]
    error: dict[str, Any]


def validate_dict(data: dict[str, Any], required_keys: list[str]) -> bool:
    """Check that all required keys exist in a dictionary.

    Args:
        data (dict[str, Any]): Dictionary to validate.
        required_keys (list[str]): Required keys to check.

    Returns:
        bool: True if all required keys are present.

    """
    return all(key in data for key in required_keys)

