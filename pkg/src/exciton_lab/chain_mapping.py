"""Star-to-chain mapping of a bosonic environment.

A spectral density J(ω) defines the measure J(ω)dω. Its orthonormal polynomials obey
x p_n = √β_{n+1} p_{n+1} + α_n p_n + √β_n p_{n−1}, and the recurrence coefficients are the
on-site frequencies α_n and nearest-neighbour hoppings √β_{n+1} of an equivalent chain, with
system coupling c₀ = √β₀ = √(∫J dω).

Equivalence is certified on a spin-boson model by propagating the star and chain pictures
exactly on truncated Fock spaces and comparing the reduced two-level states.
"""

import csv
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import trapezoid
from scipy.linalg import eigh_tridiagonal, expm
from scipy.special import roots_jacobi, roots_legendre

from exciton_lab import config_shared
from exciton_lab.errors import (
    DimensionCapError,
    FockTruncationError,
    LabValidationError,
    RecurrenceError,
)
from exciton_lab.quantum_core import DensityMatrix, trace_distance
from exciton_lab.utils.setup_logger import setup_logger
from exciton_lab.utils.types import SpectralKind

logger = setup_logger(__name__)

RECURRENCE_FLOOR = 1e-14
LANCZOS_BREAKDOWN_TOL = 1e-12

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
PROJECTOR_UP = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """Bath spectral density J(ω) ≥ 0 on a finite support.

    Use the ``flat``, ``power_law``, ``tabulated`` and ``from_csv`` constructors.
    The power law is J(ω) = prefactor·ω_c·(ω/ω_c)^s on [0, ω_c] (hard cutoff).
    """

    kind: SpectralKind
    support: tuple[float, float]
    height: float = 1.0
    exponent: float = 1.0
    cutoff: float = 1.0
    prefactor: float = 1.0
    omega: NDArray[np.float64] | None = None
    values: NDArray[np.float64] | None = None

    @classmethod
    def flat(cls, lo: float = 0.0, hi: float = 1.0, height: float = 1.0) -> "SpectralDensity":
        if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
            raise LabValidationError(f"flat density needs finite hi > lo, got [{lo}, {hi}]")
        if not height > 0.0:
            raise LabValidationError(f"flat density height must be positive, got {height}")
        return cls(kind=SpectralKind.FLAT, support=(float(lo), float(hi)), height=float(height))

    @classmethod
    def power_law(cls, exponent: float, cutoff: float, prefactor: float = 1.0) -> "SpectralDensity":
        if not exponent > -1.0:
            raise LabValidationError(f"power-law exponent must exceed -1, got {exponent}")
        if not (cutoff > 0.0 and prefactor > 0.0):
            raise LabValidationError("power-law cutoff and prefactor must be positive")
        return cls(
            kind=SpectralKind.POWER_LAW,
            support=(0.0, float(cutoff)),
            exponent=float(exponent),
            cutoff=float(cutoff),
            prefactor=float(prefactor),
        )

    @classmethod
    def tabulated(cls, omega: ArrayLike, values: ArrayLike) -> "SpectralDensity":
        """Piecewise-linear density through the samples (ω_i, J_i).

        Raises:
            LabValidationError: On unsorted or negative samples, or zero total weight.

        """
        w = np.asarray(omega, dtype=np.float64).reshape(-1)
        j = np.asarray(values, dtype=np.float64).reshape(-1)
        if w.size < 2 or w.size != j.size:
            raise LabValidationError("tabulated density needs at least two (omega, J) samples")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(j))):
            raise LabValidationError("tabulated density is not integrable: non-finite samples")
        if np.any(np.diff(w) <= 0.0):
            raise LabValidationError("tabulated frequencies must be strictly increasing")
        if np.any(j < 0.0):
            raise LabValidationError("tabulated density must be non-negative")
        if not trapezoid(j, w) > 0.0:
            raise LabValidationError("tabulated density has zero total weight")
        return cls(
            kind=SpectralKind.TABULATED,
            support=(float(w[0]), float(w[-1])),
            omega=w,
            values=j,
        )

    @classmethod
    def from_csv(cls, path: str | Path) -> "SpectralDensity":
        """Load a two-column (omega, J) CSV; a non-numeric first row is taken as header."""
        try:
            with Path(path).open(newline="", encoding="utf-8") as handle:
                rows = [row for row in csv.reader(handle) if row and not row[0].startswith("#")]
        except OSError as e:
            raise LabValidationError(f"cannot read spectral density {path}: {e}") from e
        samples = []
        for number, row in enumerate(rows, start=1):
            try:
                samples.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError) as e:
                if number == 1:
                    continue
                raise LabValidationError(f"{path}, row {number}: expected two numbers") from e
        if not samples:
            raise LabValidationError(f"{path}: no spectral density samples")
        omega, values = zip(*samples)
        return cls.tabulated(omega, values)

    def evaluate(self, omega: ArrayLike) -> NDArray[np.float64]:
        w = np.asarray(omega, dtype=np.float64)
        lo, hi = self.support
        inside = (w >= lo) & (w <= hi)
        if self.kind is SpectralKind.FLAT:
            return np.where(inside, self.height, 0.0)
        if self.kind is SpectralKind.POWER_LAW:
            scaled = np.clip(w / self.cutoff, 0.0, None)
            return np.where(inside, self.prefactor * self.cutoff * scaled**self.exponent, 0.0)
        return np.interp(w, self.omega, self.values, left=0.0, right=0.0)  # type: ignore[arg-type]

    def total_weight(self) -> float:
        """∫J(ω)dω over the support."""
        lo, hi = self.support
        if self.kind is SpectralKind.FLAT:
            return self.height * (hi - lo)
        if self.kind is SpectralKind.POWER_LAW:
            return self.prefactor * self.cutoff**2 / (self.exponent + 1.0)
        return float(trapezoid(self.values, self.omega))  # type: ignore[arg-type]

    def quadrature(self, order: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Gauss-type rule (nodes, weights) for the measure J(ω)dω.

        Exact for polynomials up to degree 2·order − 1: Gauss–Legendre for the flat density,
        Gauss–Jacobi for the power law, and composite Gauss–Legendre on each linear segment
        of a tabulated density.
        """
        if order < 1:
            raise LabValidationError(f"quadrature order must be >= 1, got {order}")
        lo, hi = self.support
        if self.kind is SpectralKind.FLAT:
            x, w = roots_legendre(order)
            return lo + 0.5 * (hi - lo) * (x + 1.0), 0.5 * (hi - lo) * self.height * w
        if self.kind is SpectralKind.POWER_LAW:
            x, w = roots_jacobi(order, 0.0, self.exponent)
            scale = self.prefactor * self.cutoff**2 / 2.0 ** (self.exponent + 1.0)
            return 0.5 * self.cutoff * (x + 1.0), scale * w

        x, w = roots_legendre(order)
        left, right = self.omega[:-1, None], self.omega[1:, None]  # type: ignore[index]
        nodes = left + 0.5 * (right - left) * (x[None, :] + 1.0)
        weights = 0.5 * (right - left) * w[None, :] * self.evaluate(nodes)
        return nodes.reshape(-1), weights.reshape(-1)

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"kind": self.kind.value, "support": list(self.support)}
        if self.kind is SpectralKind.FLAT:
            payload["height"] = self.height
        elif self.kind is SpectralKind.POWER_LAW:
            payload.update(exponent=self.exponent, cutoff=self.cutoff, prefactor=self.prefactor)
        else:
            payload["samples"] = len(self.omega)  # type: ignore[arg-type]
        return payload


@dataclass(frozen=True, eq=False)
class ChainCoefficients:
    """Chain picture of a bath.

    Attributes:
        system_coupling: c₀, coupling of the system to chain site 0.
        frequencies: On-site frequencies ω_n = α_n.
        hoppings: t_n = √β_{n+1} between sites n and n+1; the last entry couples to the
            truncated remainder of the chain and is zero for an exact finite chain.

    """

    system_coupling: float
    frequencies: NDArray[np.float64]
    hoppings: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.frequencies.shape != self.hoppings.shape or self.frequencies.size == 0:
            raise LabValidationError("chain needs matching non-empty frequencies and hoppings")

    @property
    def length(self) -> int:
        return int(self.frequencies.size)

    def jacobi_matrix(self) -> NDArray[np.float64]:
        return (
            np.diag(self.frequencies)
            + np.diag(self.hoppings[:-1], 1)
            + np.diag(self.hoppings[:-1], -1)
        )


@dataclass(frozen=True, eq=False)
class StarDiscretization:
    """Finite star bath: M modes with frequencies ω_k and couplings g_k."""

    mode_frequencies: NDArray[np.float64]
    couplings: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.mode_frequencies.shape != self.couplings.shape or self.mode_frequencies.size == 0:
            raise LabValidationError("star needs matching non-empty frequencies and couplings")
        if not (np.all(np.isfinite(self.mode_frequencies)) and np.all(np.isfinite(self.couplings))):
            raise LabValidationError("star frequencies and couplings must be finite")

    @property
    def count(self) -> int:
        return int(self.mode_frequencies.size)

    def total_weight(self) -> float:
        return float(np.sum(self.couplings**2))


@dataclass(frozen=True)
class TwoLevelSystem:
    """H_S = (gap/2)σ_z + (tunneling/2)σ_x, bath coupled through |↑⟩⟨↑|."""

    gap: float
    tunneling: float
    initial_up: bool = True

    def hamiltonian(self) -> NDArray[np.complex128]:
        return 0.5 * self.gap * SIGMA_Z + 0.5 * self.tunneling * SIGMA_X

    def initial_vector(self) -> NDArray[np.complex128]:
        return np.array([1.0, 0.0] if self.initial_up else [0.0, 1.0], dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class StarChainComparison:
    """Reduced two-level dynamics in the star and chain pictures."""

    times: NDArray[np.float64]
    star_states: NDArray[np.complex128]
    chain_states: NDArray[np.complex128]
    distances: NDArray[np.float64]
    max_leakage: float
    chain: ChainCoefficients

    @property
    def max_distance(self) -> float:
        return float(self.distances.max())

    def table(self) -> tuple[list[str], list[list[float]]]:
        header = ["t", "p_up_star", "p_up_chain", "trace_distance"]
        rows = [
            [float(t), float(s[0, 0].real), float(c[0, 0].real), float(d)]
            for t, s, c, d in zip(self.times, self.star_states, self.chain_states, self.distances)
        ]
        return header, rows


def _stieltjes(
    nodes: NDArray[np.float64], weights: NDArray[np.float64], count: int, width: float
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Recurrence coefficients α_0..α_{count−1} and β_0..β_count of a discrete measure."""
    alpha = np.zeros(count)
    beta = np.zeros(count + 1)
    beta[0] = float(np.sum(weights))
    floor = RECURRENCE_FLOOR * width**2
    p_prev = np.zeros_like(nodes)
    p = np.full_like(nodes, 1.0 / np.sqrt(beta[0]))
    for n in range(count):
        alpha[n] = float(np.sum(weights * nodes * p**2))
        r = (nodes - alpha[n]) * p - np.sqrt(beta[n]) * p_prev if n else (nodes - alpha[n]) * p
        beta[n + 1] = float(np.sum(weights * r**2))
        if not beta[n + 1] > floor:
            raise RecurrenceError(
                f"recurrence coefficient β_{n + 1}={beta[n + 1]:.3e} lost positivity; "
                "increase the quadrature order",
                index=n + 1,
            )
        p_prev, p = p, r / np.sqrt(beta[n + 1])
    return alpha, beta


def chain_coefficients(
    j: SpectralDensity, n_max: int, *, oversampling: int | None = None
) -> ChainCoefficients:
    """Chain frequencies and hoppings of ``j`` by the Stieltjes procedure.

    The measure is sampled by a Gauss rule of ``oversampling·n_max`` nodes (configured
    default 4) before running the three-term recurrence.

    Args:
        j (SpectralDensity): Bath spectral density.
        n_max (int): Number of chain sites.
        oversampling (int | None): Quadrature nodes per chain site.

    Returns:
        ChainCoefficients: c₀ = √β₀, ω_n = α_n, t_n = √β_{n+1} for n < n_max.

    Raises:
        LabValidationError: If n_max < 1.
        RecurrenceError: If some β_n is not positive.

    """
    if n_max < 1:
        raise LabValidationError(f"chain length must be >= 1, got {n_max}")
    factor = oversampling or config_shared.get_quadrature_oversampling()
    nodes, weights = j.quadrature(max(2, factor) * n_max)
    lo, hi = j.support
    alpha, beta = _stieltjes(nodes, weights, n_max, hi - lo)
    logger.debug("Stieltjes recurrence: %d coefficients from %d nodes", n_max, nodes.size)
    return ChainCoefficients(
        system_coupling=float(np.sqrt(beta[0])),
        frequencies=alpha,
        hoppings=np.sqrt(beta[1:]),
    )


def discretize(j: SpectralDensity, m: int) -> StarDiscretization:
    """M-mode star bath from the M-point Gauss rule of J(ω)dω (Golub–Welsch).

    Nodes are the eigenvalues of the M×M Jacobi matrix; weights are β₀ times the squared
    first components of its eigenvectors, and g_k = √weight_k.
    """
    if m < 1:
        raise LabValidationError(f"star discretization needs m >= 1, got {m}")
    chain = chain_coefficients(j, m)
    beta0 = chain.system_coupling**2
    if m == 1:
        nodes, weights = chain.frequencies.copy(), np.array([beta0])
    else:
        nodes, vectors = eigh_tridiagonal(chain.frequencies, chain.hoppings[:-1])
        weights = beta0 * vectors[0, :] ** 2
    return StarDiscretization(mode_frequencies=nodes, couplings=np.sqrt(weights))


def lanczos_chain(star: StarDiscretization) -> ChainCoefficients:
    """Tridiagonalize diag(ω_k) from the seed g/‖g‖ with full reorthogonalization.

    A breakdown (vanishing residual before M steps) returns the shorter chain that is exact
    on the Krylov space reached. A star with zero couplings gives c₀ = 0 and one decoupled mode.
    """
    omega, g = star.mode_frequencies, star.couplings
    norm = float(np.linalg.norm(g))
    if norm == 0.0:
        logger.warning("⚠️ Star bath is decoupled; returning a single-mode chain with c₀ = 0")
        return ChainCoefficients(0.0, omega[:1].copy(), np.zeros(1))

    scale = max(float(np.abs(omega).max()), 1.0)
    basis = [g / norm]
    alphas: list[float] = []
    betas: list[float] = []
    for k in range(star.count):
        q = basis[k]
        w = omega * q
        alphas.append(float(q @ w))
        stacked = np.array(basis)
        for _ in range(2):
            w = w - stacked.T @ (stacked @ w)
        b = float(np.linalg.norm(w))
        if k == star.count - 1:
            break
        if b <= LANCZOS_BREAKDOWN_TOL * scale:
            logger.debug("Lanczos breakdown after %d steps", k + 1)
            break
        betas.append(b)
        basis.append(w / b)

    hoppings = np.zeros(len(alphas))
    hoppings[: len(betas)] = betas
    return ChainCoefficients(norm, np.array(alphas), hoppings)


def recurrence_moments(coefficients: ChainCoefficients, count: int) -> NDArray[np.float64]:
    """Moments ∫ω^k J(ω)dω for k < count, rebuilt as c₀²·(T^k)₀₀ from the Jacobi matrix T.

    Exact for count ≤ 2·length.
    """
    if not 1 <= count <= 2 * coefficients.length:
        raise LabValidationError(f"count must lie in 1..{2 * coefficients.length}, got {count}")
    t = coefficients.jacobi_matrix()
    moments = np.empty(count)
    e0 = np.zeros(coefficients.length)
    e0[0] = 1.0
    v = e0
    for k in range(count):
        moments[k] = float(e0 @ v)
        v = t @ v
    return coefficients.system_coupling**2 * moments


def _destroy(n_fock: int) -> NDArray[np.complex128]:
    return np.diag(np.sqrt(np.arange(1, n_fock, dtype=np.float64)), 1).astype(np.complex128)


def _embed(
    op: NDArray[np.complex128], mode: int, modes: int, n_fock: int
) -> NDArray[np.complex128]:
    """Operator acting on one bath mode inside qubit ⊗ mode_0 ⊗ … ⊗ mode_{M−1}."""
    eye = np.eye(n_fock, dtype=np.complex128)
    factors = [np.eye(2, dtype=np.complex128)] + [op if k == mode else eye for k in range(modes)]
    return reduce(np.kron, factors)


def _check_dimension(modes: int, n_fock: int) -> int:
    dim = 2 * n_fock**modes
    cap = config_shared.get_fock_dimension_cap()
    if dim > cap:
        raise DimensionCapError(f"truncated space of dimension {dim} exceeds the cap {cap}")
    return dim


def _star_hamiltonian(
    system: TwoLevelSystem, star: StarDiscretization, n_fock: int
) -> NDArray[np.complex128]:
    modes = star.count
    bath_eye = np.eye(n_fock**modes, dtype=np.complex128)
    a = _destroy(n_fock)
    h = np.kron(system.hamiltonian(), bath_eye)
    up = np.kron(PROJECTOR_UP, bath_eye)
    for k in range(modes):
        ak = _embed(a, k, modes, n_fock)
        h += star.mode_frequencies[k] * (ak.conj().T @ ak)
        h += star.couplings[k] * (up @ (ak + ak.conj().T))
    return h


def _chain_hamiltonian(
    system: TwoLevelSystem, chain: ChainCoefficients, n_fock: int
) -> NDArray[np.complex128]:
    modes = chain.length
    bath_eye = np.eye(n_fock**modes, dtype=np.complex128)
    a = _destroy(n_fock)
    ops = [_embed(a, k, modes, n_fock) for k in range(modes)]
    h = np.kron(system.hamiltonian(), bath_eye)
    for k, bk in enumerate(ops):
        h += chain.frequencies[k] * (bk.conj().T @ bk)
        if k + 1 < modes:
            hop = chain.hoppings[k] * (bk.conj().T @ ops[k + 1])
            h += hop + hop.conj().T
    b0 = ops[0]
    h += chain.system_coupling * (np.kron(PROJECTOR_UP, bath_eye) @ (b0 + b0.conj().T))
    return h


def _propagate(
    h: NDArray[np.complex128],
    psi0: NDArray[np.complex128],
    times: NDArray[np.float64],
    modes: int,
    n_fock: int,
) -> tuple[NDArray[np.complex128], float]:
    """Reduced qubit states along ``times`` and the largest top-Fock-level occupancy."""
    propagators: dict[float, NDArray[np.complex128]] = {}
    psi = psi0
    previous = 0.0
    states = np.empty((times.size, 2, 2), dtype=np.complex128)
    leakage = 0.0
    for i, t in enumerate(times):
        dt = float(t - previous)
        if dt != 0.0:
            if dt not in propagators:
                propagators[dt] = expm(-1j * dt * h)
            psi = propagators[dt] @ psi
        previous = float(t)
        amplitudes = psi.reshape((2,) + (n_fock,) * modes)
        occupancy = np.abs(amplitudes) ** 2
        for k in range(modes):
            leakage = max(leakage, float(np.take(occupancy, n_fock - 1, axis=k + 1).sum()))
        block = psi.reshape(2, -1)
        states[i] = block @ block.conj().T
    return states, leakage


def propagate_star_vs_chain(
    system: TwoLevelSystem,
    star: StarDiscretization,
    n_fock: int,
    t_grid: ArrayLike,
    *,
    chain: ChainCoefficients | None = None,
) -> StarChainComparison:
    """Propagate the spin-boson model exactly in the star and chain pictures.

    Both start from the system state ⊗ bath vacuum. The chain defaults to
    ``lanczos_chain(star)``. The reported distance is the maximum over ``t_grid`` of the
    trace distance between the two reduced system states.

    Raises:
        LabValidationError: On n_fock < 2 or a malformed time grid.
        DimensionCapError: If 2·n_fock^M exceeds the configured cap.
        FockTruncationError: If the highest Fock level holds more than the tolerated
            population in either picture.

    """
    if n_fock < 2:
        raise LabValidationError(f"n_fock must be >= 2, got {n_fock}")
    times = np.asarray(t_grid, dtype=np.float64).reshape(-1)
    if times.size == 0 or times[0] < 0.0 or np.any(np.diff(times) < 0.0):
        raise LabValidationError("time grid must be non-empty, non-negative and non-decreasing")
    chain = chain or lanczos_chain(star)
    star_dim = _check_dimension(star.count, n_fock)
    chain_dim = _check_dimension(chain.length, n_fock)

    logger.info(
        "🚀 Star vs chain: M=%d star modes, %d chain sites, n_fock=%d",
        star.count,
        chain.length,
        n_fock,
    )
    psi_sys = system.initial_vector()
    star_psi0 = np.zeros(star_dim // 2, dtype=np.complex128)
    star_psi0[0] = 1.0
    chain_psi0 = np.zeros(chain_dim // 2, dtype=np.complex128)
    chain_psi0[0] = 1.0

    star_states, star_leak = _propagate(
        _star_hamiltonian(system, star, n_fock),
        np.kron(psi_sys, star_psi0),
        times,
        star.count,
        n_fock,
    )
    chain_states, chain_leak = _propagate(
        _chain_hamiltonian(system, chain, n_fock),
        np.kron(psi_sys, chain_psi0),
        times,
        chain.length,
        n_fock,
    )
    leakage = max(star_leak, chain_leak)
    tolerance = config_shared.get_fock_leakage_tolerance()
    if leakage > tolerance:
        raise FockTruncationError(
            f"highest Fock level holds {leakage:.3e} > {tolerance:.1e}; increase n_fock",
            leakage=leakage,
        )

    distances = np.array(
        [
            trace_distance(DensityMatrix.from_array(s), DensityMatrix.from_array(c))
            for s, c in zip(star_states, chain_states)
        ]
    )
    logger.info("✅ Star/chain max trace distance %.3e (leakage %.3e)", distances.max(), leakage)
    return StarChainComparison(
        times=times,
        star_states=star_states,
        chain_states=chain_states,
        distances=distances,
        max_leakage=leakage,
        chain=chain,
    )


def chain_table(coefficients: ChainCoefficients) -> tuple[list[str], list[list[Any]]]:
    rows = [
        [n, float(w), float(t)]
        for n, (w, t) in enumerate(zip(coefficients.frequencies, coefficients.hoppings))
    ]
    return ["n", "omega_n", "t_n"], rows
