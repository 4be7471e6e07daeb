"""Exception hierarchy shared by all laboratory modules.

Validation errors signal bad inputs and map to CLI exit code 2; numerical errors signal
failures of an otherwise valid computation and map to exit code 3.
"""


class LabError(Exception):
    """Base class for all laboratory errors."""


class LabValidationError(LabError, ValueError):
    """Raised when inputs violate a documented precondition."""


class ConfigValidationError(LabValidationError):
    """Raised when an experiment configuration is malformed.

    Attributes:
        field: Dotted path of the offending field, or None for document-level errors.
        line: 1-based line of a JSON syntax error, if known.
        column: 1-based column of a JSON syntax error, if known.

    """

    def __init__(
        self,
        message: str,
        field: str | None = None,
        line: int | None = None,
        column: int | None = None,
    ) -> None:
        self.field = field
        self.line = line
        self.column = column
        location = []
        if field:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}, column {column}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class NumericalError(LabError, RuntimeError):
    """Raised when a numerical procedure fails on valid input."""


class IntegrationError(NumericalError):
    """Raised when the master-equation integrator cannot advance.

    Attributes:
        time: Time (ps) at which the integrator stopped.
        gamma: Uniform dephasing rate of the sweep point, when raised from a sweep.

    """

    def __init__(self, message: str, time: float | None = None, gamma: float | None = None) -> None:
        self.time = time
        self.gamma = gamma
        super().__init__(message)


class NullSpaceError(NumericalError):
    """Raised when the stationary structure of a generator cannot be resolved."""


class RecurrenceError(NumericalError):
    """Raised when a recurrence coefficient loses positivity.

    Attributes:
        index: Recurrence index n at which β_n ≤ 0 was encountered.

    """

    def __init__(self, message: str, index: int) -> None:
        self.index = index
        super().__init__(message)


class DimensionCapError(NumericalError):
    """Raised when a truncated Hilbert space exceeds the configured dimension cap."""


class FockTruncationError(NumericalError):
    """Raised when population leaks into the highest retained Fock level.

    Attributes:
        leakage: Largest occupancy of the highest Fock level observed.

    """

    def __init__(self, message: str, leakage: float) -> None:
        self.leakage = leakage
        super().__init__(message)


class IllConditionedError(NumericalError):
    """Raised when a dynamical map is too ill-conditioned to invert.

    Attributes:
        condition_number: Condition number of the offending superoperator.

    """

    def __init__(self, message: str, condition_number: float) -> None:
        self.condition_number = condition_number
        super().__init__(message)


class ConvergenceError(NumericalError):
    """Raised when an iterative optimizer exhausts its iteration cap.

    Attributes:
        iterations: Iterations performed.

    """

    def __init__(self, message: str, iterations: int) -> None:
        self.iterations = iterations
        super().__init__(message)


class DecompositionError(NumericalError):
    """Raised when a constructive decomposition fails its reconstruction check.

    Attributes:
        residual: Reconstruction residual.

    """

    def __init__(self, message: str, residual: float) -> None:
        self.residual = residual
        super().__init__(message)
