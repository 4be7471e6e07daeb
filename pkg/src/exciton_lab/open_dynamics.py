"""Lindblad dynamics of an exciton network extended by ground and sink levels.

Basis layout of the (N+2)-dimensional Hilbert space: index 0 is the ground state |0⟩,
indices 1..N are the sites, index N+1 is the sink |S⟩. Jump operators:

- dephasing |j⟩⟨j| at rate γ_j, so the coherence between sites j and k decays as
  e^{−(γ_j+γ_k)t/2};
- dissipation |0⟩⟨j| at rate κ_j;
- trapping |S⟩⟨s| at rate Γ.
"""

import time
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import solve_ivp
from scipy.linalg import null_space

from exciton_lab import config_shared
from exciton_lab.errors import IntegrationError, LabValidationError, NullSpaceError
from exciton_lab.network_model import ExcitonNetwork
from exciton_lab.quantum_core import (
    DensityMatrix,
    Superoperator,
    lindblad_superoperator,
    vectorize,
)
from exciton_lab.utils.metrics import record_integration_metrics
from exciton_lab.utils.setup_logger import setup_logger

logger = setup_logger(__name__)

IMPLICIT_METHODS = ("Radau", "BDF")
NULL_SPACE_RCOND = 1e-10
GRAM_CONDITION_CAP = 1e10
LONG_TIME_FACTOR = 50.0
DECAY_RATE_FLOOR = 1e-9
CROSS_VALIDATION_TOL = 1e-4


@dataclass(frozen=True)
class IntegratorSettings:
    """Adaptive integrator choice and tolerances."""

    method: str = "DOP853"
    rtol: float = 1e-10
    atol: float = 1e-12

    @classmethod
    def from_config(cls) -> "IntegratorSettings":
        return cls(
            method=config_shared.get_integrator_method(),
            rtol=config_shared.get_integrator_rtol(),
            atol=config_shared.get_integrator_atol(),
        )

    def as_dict(self) -> dict[str, Any]:
        return {"method": self.method, "rtol": self.rtol, "atol": self.atol}


@dataclass(frozen=True, eq=False)
class LindbladModel:
    """Hamiltonian, jump operators and cached generator for one network."""

    network: ExcitonNetwork
    hamiltonian: NDArray[np.complex128]
    jump_operators: tuple[tuple[NDArray[np.complex128], float], ...]
    generator: Superoperator

    @property
    def hilbert_dim(self) -> int:
        return self.network.n_sites + 2

    @property
    def sink_index(self) -> int:
        return self.network.n_sites + 1

    def initial_state(self) -> DensityMatrix:
        """Excitation localized on the network's initial site."""
        return site_state(self.network, self.network.initial_site)


@dataclass(frozen=True, eq=False)
class TrajectoryResult:
    """Sampled populations and coherences of one integration.

    Attributes:
        times: Sample times in ps.
        site_populations: N×T site populations.
        sink_population: p_sink(t).
        ground_population: Population lost to the ground state.
        coherence_l1: Sum of |off-diagonal| site-block elements.
        min_eigenvalues: Smallest eigenvalue of ρ(t) per sample.
        trace_errors: |tr ρ(t) − 1| per sample.
        states: T×(N+2)×(N+2) sampled density matrices.

    """

    times: NDArray[np.float64]
    site_populations: NDArray[np.float64]
    sink_population: NDArray[np.float64]
    ground_population: NDArray[np.float64]
    coherence_l1: NDArray[np.float64]
    min_eigenvalues: NDArray[np.float64]
    trace_errors: NDArray[np.float64]
    states: NDArray[np.complex128]

    @property
    def final_efficiency(self) -> float:
        return float(self.sink_population[-1])

    def conservation_violations(
        self,
        trace_tol: float = 1e-8,
        positivity_tol: float = 1e-8,
        monotone_tol: float = 1e-10,
    ) -> list[str]:
        """Describe every violated conservation property; empty when all hold."""
        problems = []
        if self.trace_errors.size and float(self.trace_errors.max()) >= trace_tol:
            problems.append(f"trace error {self.trace_errors.max():.3e}")
        if self.min_eigenvalues.size and float(self.min_eigenvalues.min()) < -positivity_tol:
            problems.append(f"negative eigenvalue {self.min_eigenvalues.min():.3e}")
        steps = np.diff(self.sink_population)
        if steps.size and float(steps.min()) < -monotone_tol:
            problems.append(f"sink population decreased by {-steps.min():.3e}")
        return problems


def site_state(net: ExcitonNetwork, site: int) -> DensityMatrix:
    """Excitation localized on a 1-based site, in the extended (N+2) basis."""
    if not 1 <= site <= net.n_sites:
        raise LabValidationError(f"site {site} outside 1..{net.n_sites}")
    return DensityMatrix.basis(net.n_sites + 2, site)


def assemble_generator(net: ExcitonNetwork) -> LindbladModel:
    """Build the Lindblad model of a network.

    Args:
        net (ExcitonNetwork): Validated network.

    Returns:
        LindbladModel: Model with the column-stacked generator cached.

    """
    n = net.n_sites
    dim = n + 2
    hamiltonian = np.zeros((dim, dim), dtype=np.complex128)
    hamiltonian[1 : n + 1, 1 : n + 1] = net.hamiltonian()

    jumps: list[tuple[NDArray[np.complex128], float]] = []
    for j in range(1, n + 1):
        dephasing = np.zeros((dim, dim), dtype=np.complex128)
        dephasing[j, j] = 1.0
        jumps.append((dephasing, float(net.dephasing_rates[j - 1])))
    for j in range(1, n + 1):
        dissipation = np.zeros((dim, dim), dtype=np.complex128)
        dissipation[0, j] = 1.0
        jumps.append((dissipation, float(net.dissipation_rates[j - 1])))
    trapping = np.zeros((dim, dim), dtype=np.complex128)
    trapping[n + 1, net.sink_site] = 1.0
    jumps.append((trapping, net.sink_rate))

    generator = lindblad_superoperator(hamiltonian, jumps)
    logger.debug("🧮 Assembled %d×%d generator for %d sites", dim * dim, dim * dim, n)
    return LindbladModel(
        network=net, hamiltonian=hamiltonian, jump_operators=tuple(jumps), generator=generator
    )


def _time_grid(t_grid: ArrayLike) -> NDArray[np.float64]:
    times = np.array(t_grid, dtype=np.float64).reshape(-1)
    if times.size == 0:
        raise LabValidationError("time grid is empty")
    if not np.all(np.isfinite(times)):
        raise LabValidationError("time grid contains non-finite values")
    if times[0] != 0.0:
        raise LabValidationError(f"time grid must start at 0, got {times[0]}")
    if np.any(np.diff(times) <= 0.0):
        raise LabValidationError("time grid must be strictly increasing")
    return times


def _trajectory(
    model: LindbladModel, times: NDArray[np.float64], states: NDArray[np.complex128]
) -> TrajectoryResult:
    n = model.network.n_sites
    states = 0.5 * (states + states.conj().transpose(0, 2, 1))
    diagonals = np.real(np.einsum("tii->ti", states))
    site_block = states[:, 1 : n + 1, 1 : n + 1]
    magnitudes = np.abs(site_block)
    off_diagonal = magnitudes.sum(axis=(1, 2)) - np.einsum("tii->t", magnitudes)
    return TrajectoryResult(
        times=times,
        site_populations=diagonals[:, 1 : n + 1].T.copy(),
        sink_population=diagonals[:, n + 1].copy(),
        ground_population=diagonals[:, 0].copy(),
        coherence_l1=off_diagonal,
        min_eigenvalues=np.linalg.eigvalsh(states)[:, 0],
        trace_errors=np.abs(diagonals.sum(axis=1) - 1.0),
        states=states,
    )


def evolve(
    model: LindbladModel,
    rho0: DensityMatrix,
    t_grid: ArrayLike,
    settings: IntegratorSettings | None = None,
) -> TrajectoryResult:
    """Integrate the master equation and sample it on ``t_grid``.

    Args:
        model (LindbladModel): Assembled model.
        rho0 (DensityMatrix): Initial state in the extended basis.
        t_grid (ArrayLike): Strictly increasing sample times in ps, starting at 0.
        settings (IntegratorSettings | None): Integrator; configuration defaults when omitted.

    Returns:
        TrajectoryResult: Sampled trajectory.

    Raises:
        LabValidationError: On a malformed grid or state dimension.
        IntegrationError: If the integrator cannot advance (step-size underflow).

    """
    settings = settings or IntegratorSettings.from_config()
    times = _time_grid(t_grid)
    dim = model.hilbert_dim
    if rho0.dim != dim:
        raise LabValidationError(f"initial state has dimension {rho0.dim}, model needs {dim}")

    if times.size == 1:
        return _trajectory(model, times, rho0.entries[None, :, :].astype(np.complex128))

    generator = np.asarray(model.generator.matrix)

    def rhs(_t: float, y: NDArray[np.complex128]) -> NDArray[np.complex128]:
        return generator @ y

    options: dict[str, Any] = {}
    if settings.method in IMPLICIT_METHODS:
        options["jac"] = generator

    started = time.perf_counter()
    solution = solve_ivp(
        rhs,
        (0.0, float(times[-1])),
        vectorize(rho0.entries),
        method=settings.method,
        t_eval=times,
        rtol=settings.rtol,
        atol=settings.atol,
        **options,
    )
    duration = time.perf_counter() - started
    record_integration_metrics(settings.method, solution.success, duration, int(solution.nfev))

    if not solution.success:
        failed_at = float(solution.t[-1]) if solution.t.size else 0.0
        logger.error("❌ Integration failed at t=%.6g ps: %s", failed_at, solution.message)
        raise IntegrationError(
            f"integration failed at t={failed_at:.6g} ps: {solution.message}", time=failed_at
        )

    states = solution.y.T.reshape(times.size, dim, dim).transpose(0, 2, 1)
    logger.debug(
        "✅ Integrated %d samples to t=%.4g ps with %d evaluations in %.3fs",
        times.size,
        times[-1],
        solution.nfev,
        duration,
    )
    return _trajectory(model, times, states)


def trajectory_table(result: TrajectoryResult) -> tuple[list[str], list[list[float]]]:
    """CSV header and rows: time_ps, p_site_1..N, p_sink, p_ground, coherence_l1."""
    n = result.site_populations.shape[0]
    sites = [f"p_site_{j}" for j in range(1, n + 1)]
    header = ["time_ps", *sites, "p_sink", "p_ground", "coherence_l1"]
    rows = [
        [
            float(result.times[k]),
            *[float(p) for p in result.site_populations[:, k]],
            float(result.sink_population[k]),
            float(result.ground_population[k]),
            float(result.coherence_l1[k]),
        ]
        for k in range(result.times.size)
    ]
    return header, rows


def _stationary_projection(model: LindbladModel, rho0: DensityMatrix) -> NDArray[np.complex128]:
    generator = np.asarray(model.generator.matrix)
    right = null_space(generator, rcond=NULL_SPACE_RCOND)
    left = null_space(generator.conj().T, rcond=NULL_SPACE_RCOND)
    if right.shape[1] == 0 or right.shape[1] != left.shape[1]:
        raise NullSpaceError(
            f"kernel dimensions disagree: right {right.shape[1]}, left {left.shape[1]}"
        )
    gram = left.conj().T @ right
    condition = float(np.linalg.cond(gram))
    if not np.isfinite(condition) or condition > GRAM_CONDITION_CAP:
        raise NullSpaceError(f"stationary projection is ill-conditioned (cond={condition:.3e})")
    coefficients = np.linalg.solve(gram, left.conj().T @ vectorize(rho0.entries))
    return right @ coefficients


def slowest_decay_rate(model: LindbladModel) -> float:
    """Smallest non-zero decay rate −Re λ among the generator eigenvalues, in ps⁻¹."""
    eigenvalues = np.linalg.eigvals(np.asarray(model.generator.matrix))
    rates = -eigenvalues.real
    scale = max(float(np.abs(eigenvalues).max()), 1.0)
    decaying = rates[rates > DECAY_RATE_FLOOR * scale]
    if decaying.size == 0:
        raise NullSpaceError("generator has no decaying modes")
    return float(decaying.min())


def _long_time_sink_population(
    model: LindbladModel, rho0: DensityMatrix, settings: IntegratorSettings | None
) -> float:
    horizon = LONG_TIME_FACTOR / slowest_decay_rate(model)
    logger.debug("⏳ Long-time integration to T=%.4g ps", horizon)
    result = evolve(model, rho0, [0.0, horizon], settings)
    return float(result.sink_population[-1])


def asymptotic_sink_population(
    model: LindbladModel,
    rho0: DensityMatrix,
    *,
    cross_validate: bool = False,
    settings: IntegratorSettings | None = None,
) -> float:
    """Long-time sink population from the stationary structure of the generator.

    The initial state is projected onto the kernel of the generator along its left kernel.
    If that fails, the population is read off a long-time integration to
    T = 50 / (slowest decay rate of the generator), i.e. 50 e-folds of the slowest mode.

    Args:
        model (LindbladModel): Assembled model with Γ > 0.
        rho0 (DensityMatrix): Initial state.
        cross_validate (bool): Also integrate to long times and require agreement to 1e-4.
        settings (IntegratorSettings | None): Integrator for the long-time route.

    Returns:
        float: Asymptotic p_sink in [0, 1].

    Raises:
        LabValidationError: If the sink rate is zero.
        NullSpaceError: If cross-validation disagrees.

    """
    if model.network.sink_rate <= 0.0:
        raise LabValidationError("asymptotic sink population needs a positive sink rate")
    if rho0.dim != model.hilbert_dim:
        raise LabValidationError(
            f"initial state has dimension {rho0.dim}, model needs {model.hilbert_dim}"
        )

    try:
        stationary = _stationary_projection(model, rho0)
        sink = model.sink_index
        population = float(np.real(stationary[sink + sink * model.hilbert_dim]))
    except NullSpaceError as e:
        logger.warning("⚠️ Null-space projection failed (%s); using long-time integration", e)
        return min(1.0, max(0.0, _long_time_sink_population(model, rho0, settings)))

    population = min(1.0, max(0.0, population))
    if cross_validate:
        integrated = _long_time_sink_population(model, rho0, settings)
        if abs(integrated - population) > CROSS_VALIDATION_TOL:
            raise NullSpaceError(
                f"null-space ({population:.8f}) and long-time ({integrated:.8f}) estimates disagree"
            )
        logger.debug("✅ Asymptotic sink population cross-validated: %.8f", population)
    return population
