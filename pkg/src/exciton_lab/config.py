"""Lab-specific defaults for the bundled experiments."""

from exciton_lab.config_shared import *  # noqa: F401,F403

# FMO case study
FMO_TIME_PS = 5.0
FMO_SINK_RATE = 1.0
FMO_TRAJECTORY_POINTS = 201
FMO_GAMMA_BRACKET = (0.1, 1.0e4)
FMO_DISSIPATION_RATE = 5.0e-4

# Dephasing sweeps
SWEEP_POINTS = 40
OPTIMUM_GAMMA_RTOL = 1e-2

# Star/chain comparison
DEFAULT_N_FOCK = 4
DEFAULT_STAR_MODES = 4


def default_sweep_points() -> int:
    """Return the default number of log-spaced points in a dephasing sweep."""
    return SWEEP_POINTS


def default_fmo_bracket() -> tuple[float, float]:
    """Return the default (γ_lo, γ_hi) bracket in ps⁻¹ for the FMO optimum search."""
    return FMO_GAMMA_BRACKET
