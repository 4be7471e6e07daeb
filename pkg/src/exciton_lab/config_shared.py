"""Shared runtime configuration for the laboratory.

Provides typed, cached getter functions that resolve numerical tolerances, resource limits
and logging settings from environment variables or defaults, in that order.
"""

import os
from functools import lru_cache

from exciton_lab.utils.config_utils import (
    get_config_bool,
    get_config_float,
    get_config_int,
    get_config_value,
)

INTEGRATOR_METHODS = ("RK45", "DOP853", "Radau", "BDF")


@lru_cache
def get_log_level() -> str:
    """Retrieve the logging level.

    Returns:
        str: Log level name such as 'DEBUG', 'INFO' or 'WARNING'.

    Defaults to 'INFO' if not set.

    """
    return get_config_value("LOG_LEVEL", "INFO").upper()


@lru_cache
def get_log_format() -> str:
    """Retrieve the log output format.

    Returns:
        str: Either 'text' or 'json'.

    Defaults to 'text' if not set.

    """
    return get_config_value("LOG_FORMAT", "text").lower()


@lru_cache
def get_log_file() -> str | None:
    """Retrieve the optional rotating log file path.

    Returns:
        str | None: File path, or None to log to stdout only.

    """
    return get_config_value("LOG_FILE", "") or None


@lru_cache
def get_integrator_method() -> str:
    """Retrieve the adaptive integrator used for master-equation propagation.

    Returns:
        str: One of 'RK45', 'DOP853', 'Radau', 'BDF'.

    Defaults to 'DOP853' if not set or unknown.

    """
    method = get_config_value("INTEGRATOR_METHOD", "DOP853")
    return method if method in INTEGRATOR_METHODS else "DOP853"


@lru_cache
def get_integrator_rtol() -> float:
    """Retrieve the integrator relative tolerance.

    Returns:
        float: Relative local error tolerance per step.

    Defaults to 1e-10 if not set.

    """
    return get_config_float("INTEGRATOR_RTOL", 1e-10)


@lru_cache
def get_integrator_atol() -> float:
    """Retrieve the integrator absolute tolerance.

    Returns:
        float: Absolute local error tolerance per step.

    Defaults to 1e-12 if not set.

    """
    return get_config_float("INTEGRATOR_ATOL", 1e-12)


@lru_cache
def get_max_workers() -> int:
    """Retrieve the size of the worker pool used for independent sweep points.

    Returns:
        int: Number of worker processes (at least 1).

    Defaults to the number of processors if not set.

    """
    return max(1, get_config_int("MAX_WORKERS", os.cpu_count() or 1))


@lru_cache
def get_fock_dimension_cap() -> int:
    """Retrieve the cap on the total Hilbert-space dimension of truncated Fock propagation.

    Returns:
        int: Maximum dimension of system ⊗ bath.

    Defaults to 4096 if not set.

    """
    return get_config_int("FOCK_DIMENSION_CAP", 4096)


@lru_cache
def get_fock_leakage_tolerance() -> float:
    """Retrieve the tolerated occupancy of the highest retained Fock level.

    Returns:
        float: Leakage tolerance.

    Defaults to 1e-6 if not set.

    """
    return get_config_float("FOCK_LEAKAGE_TOLERANCE", 1e-6)


@lru_cache
def get_condition_number_cap() -> float:
    """Retrieve the condition-number cap for inverting dynamical maps.

    Returns:
        float: Largest accepted condition number.

    Defaults to 1e8 if not set.

    """
    return get_config_float("CONDITION_NUMBER_CAP", 1e8)


@lru_cache
def get_quadrature_oversampling() -> int:
    """Retrieve the quadrature oversampling factor for the Stieltjes procedure.

    Returns:
        int: Quadrature nodes per requested recurrence coefficient.

    Defaults to 4 if not set.

    """
    return max(2, get_config_int("QUADRATURE_OVERSAMPLING", 4))


@lru_cache
def get_optimizer_max_iterations() -> int:
    """Retrieve the iteration cap of the projected-gradient optimizer.

    Returns:
        int: Maximum number of iterations.

    Defaults to 5000 if not set.

    """
    return get_config_int("OPTIMIZER_MAX_ITERATIONS", 5000)


@lru_cache
def get_optimizer_rtol() -> float:
    """Retrieve the relative tolerance of the projected-gradient optimizer.

    Returns:
        float: Relative change in objective accepted as converged.

    Defaults to 1e-6 if not set.

    """
    return get_config_float("OPTIMIZER_RTOL", 1e-6)


@lru_cache
def get_csv_significant_digits() -> int:
    """Retrieve the number of significant digits used for CSV floats.

    Returns:
        int: Significant digits.

    Defaults to 17 (round-trip safe) if not set.

    """
    return get_config_int("CSV_SIGNIFICANT_DIGITS", 17)


@lru_cache
def get_metrics_enabled() -> bool:
    """Retrieve whether the metrics exposition file is written after a run.

    Returns:
        bool: True to write metrics.prom.

    Defaults to True if not set.

    """
    return get_config_bool("METRICS_ENABLED", True)
