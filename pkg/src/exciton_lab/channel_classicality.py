"""Classicality tests for dynamical maps reconstructed from state snapshots.

Two notions are tested. A map is random-unitary (classical environment) when it is a convex
mixture of unitary conjugations; such maps are unital, so a unitality defect certifies the
opposite, and for qubits every unital CPTP map admits an explicit decomposition. A map is
measure-and-prepare (classical system dynamics) when it is entanglement breaking; negativity
of its normalized Choi state certifies the opposite, and for qubits zero negativity settles it.

Distances to restricted classical families are upper bounds obtained by minimizing the
relative entropy between normalized Choi states over mixtures of a fixed dictionary.
"""

import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import expm
from scipy.spatial.transform import Rotation

from exciton_lab import config_shared
from exciton_lab.errors import (
    ConvergenceError,
    DecompositionError,
    IllConditionedError,
    LabValidationError,
)
from exciton_lab.quantum_core import (
    ChoiMatrix,
    DensityMatrix,
    Superoperator,
    choi_to_superop,
    decode_matrix,
    encode_matrix,
    kraus_to_superoperator,
    lindblad_superoperator,
    partial_trace,
    partial_transpose,
    relative_entropy,
    superop_to_choi,
    vectorize,
)
from exciton_lab.utils.setup_logger import setup_logger
from exciton_lab.utils.types import ClassicalSetKind, Verdict

logger = setup_logger(__name__)

TRACE_PRESERVATION_TOL = 1e-8
CP_TOL = 1e-8
UNITALITY_TOL = 1e-8
WITNESS_THRESHOLD = 1e-6
RESIDUAL_TOL = 1e-8
PROBABILITY_CLIP = 1e-10
PROBABILITY_DROP = 1e-12
EIGENVALUE_FLOOR = 1e-14
OPTIMALITY_GAP_FLOOR = 1e-9
ARMIJO_SLOPE = 1e-4
MAX_BACKTRACKS = 60

PAULIS = (
    np.eye(2, dtype=np.complex128),
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Trace-preserving map with both representations.

    Attributes:
        superop: Column-stacked superoperator.
        choi: Choi matrix (input ⊗ output).
        cp_defect: Magnitude of the most negative Choi eigenvalue before any CP projection.

    """

    superop: Superoperator
    choi: ChoiMatrix
    cp_defect: float = 0.0

    def __post_init__(self) -> None:
        defect = self.superop.trace_preservation_defect()
        if defect > TRACE_PRESERVATION_TOL:
            raise LabValidationError(f"map is not trace preserving (defect {defect:.3e})")

    @classmethod
    def from_superoperator(cls, superop: Superoperator) -> "QuantumChannel":
        choi = superop_to_choi(superop)
        return cls(superop=superop, choi=choi, cp_defect=max(0.0, -choi.min_eigenvalue()))

    @property
    def dim(self) -> int:
        return self.superop.dim

    def apply(self, rho: DensityMatrix | ArrayLike) -> NDArray[np.complex128]:
        return self.superop.apply(rho)

    def is_completely_positive(self, tol: float = CP_TOL) -> bool:
        return self.choi.min_eigenvalue() >= -tol


@dataclass(frozen=True)
class WitnessedVerdict:
    """Verdict of one classicality test with the value backing it."""

    verdict: Verdict
    witness: float

    def to_dict(self) -> dict[str, Any]:
        return {"verdict": self.verdict.value, "witness": _json_float(self.witness)}


@dataclass(frozen=True, eq=False)
class ClassicalityReport:
    """Both classicality tests applied to one map."""

    unitality_defect: float
    ru: WitnessedVerdict
    mp: WitnessedVerdict
    ru_decomposition: list[tuple[float, NDArray[np.complex128]]] | None = None
    ru_residual: float | None = None
    upper_bound_distance: float | None = None
    cp_defect: float = 0.0
    note: str | None = None

    def to_dict(self) -> dict[str, Any]:
        decomposition = None
        if self.ru_decomposition is not None:
            decomposition = [
                {"probability": p, "unitary": encode_matrix(u)} for p, u in self.ru_decomposition
            ]
        return {
            "unitality_defect": _json_float(self.unitality_defect),
            "cp_defect": self.cp_defect,
            "random_unitary": self.ru.to_dict(),
            "measure_prepare": self.mp.to_dict(),
            "ru_decomposition": decomposition,
            "ru_residual": self.ru_residual,
            "upper_bound_distance": _json_float(self.upper_bound_distance),
            "note": self.note,
        }


@dataclass(frozen=True, eq=False)
class TrajectoryClassification:
    """Per-interval reports of a sampled map family and the overall verdict."""

    times: tuple[float, ...]
    reports: tuple[ClassicalityReport, ...]
    verdict: Verdict

    def to_dict(self) -> dict[str, Any]:
        intervals = [
            {"start": self.times[i], "end": self.times[i + 1], **report.to_dict()}
            for i, report in enumerate(self.reports)
        ]
        return {"verdict": self.verdict.value, "intervals": intervals}


@dataclass(frozen=True, eq=False)
class ChannelSnapshot:
    """Map taking the initial time to ``time``."""

    time: float
    channel: QuantumChannel


@dataclass(frozen=True, eq=False)
class MixtureFit:
    """Best dictionary mixture found by the relative-entropy minimization."""

    distance: float
    weights: NDArray[np.float64]
    iterations: int
    converged: bool = True
    members: list[Superoperator] = field(repr=False, default_factory=list)


def _json_float(value: float | None) -> float | str | None:
    if value is None:
        return None
    if np.isnan(value):
        return "nan"
    if np.isinf(value):
        return "inf"
    return float(value)


def identity_channel(dim: int) -> QuantumChannel:
    return QuantumChannel.from_superoperator(Superoperator.identity(dim))


def channel_from_kraus(kraus: Sequence[ArrayLike]) -> QuantumChannel:
    return QuantumChannel.from_superoperator(kraus_to_superoperator(kraus))


def unitary_channel(unitary: ArrayLike) -> QuantumChannel:
    return channel_from_kraus([unitary])


def mixed_unitary_channel(
    probabilities: Sequence[float], unitaries: Sequence[ArrayLike]
) -> QuantumChannel:
    """Convex mixture Σ p_i U_i ρ U_i†."""
    if len(probabilities) != len(unitaries) or not unitaries:
        raise LabValidationError("need one probability per unitary")
    probs = np.asarray(probabilities, dtype=np.float64)
    if np.any(probs < 0.0) or abs(probs.sum() - 1.0) > 1e-12:
        raise LabValidationError("mixture probabilities must be non-negative and sum to 1")
    return channel_from_kraus([np.sqrt(p) * np.asarray(u) for p, u in zip(probs, unitaries)])


def pauli_channel(probabilities: Sequence[float]) -> QuantumChannel:
    """Qubit mixture of I, X, Y, Z with the given probabilities."""
    if len(probabilities) != 4:
        raise LabValidationError("a Pauli channel needs four probabilities")
    return mixed_unitary_channel(probabilities, PAULIS)


def dephasing_channel(lam: float) -> QuantumChannel:
    """Qubit dephasing that scales off-diagonal elements by ``lam``."""
    if not -1.0 <= lam <= 1.0:
        raise LabValidationError(f"dephasing factor must lie in [-1, 1], got {lam}")
    return pauli_channel([(1.0 + lam) / 2.0, 0.0, 0.0, (1.0 - lam) / 2.0])


def amplitude_damping_channel(p: float) -> QuantumChannel:
    """Qubit decay |1⟩ → |0⟩ with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise LabValidationError(f"damping probability must lie in [0, 1], got {p}")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - p)]])
    k1 = np.array([[0.0, np.sqrt(p)], [0.0, 0.0]])
    return channel_from_kraus([k0, k1])


def depolarizing_channel(dim: int, p: float = 1.0) -> QuantumChannel:
    """(1 − p)ρ + p·tr(ρ)·I/d; ``p = 1`` is fully depolarizing."""
    if not 0.0 <= p <= 1.0:
        raise LabValidationError(f"depolarizing probability must lie in [0, 1], got {p}")
    vec_identity = vectorize(np.eye(dim))
    matrix = (1.0 - p) * np.eye(dim * dim) + p * np.outer(vec_identity, vec_identity.conj()) / dim
    return QuantumChannel.from_superoperator(Superoperator(matrix))


def semigroup_channel(generator: Superoperator, t: float) -> QuantumChannel:
    """exp(L t) of a Lindblad generator."""
    if t < 0.0:
        raise LabValidationError(f"semigroup time must be non-negative, got {t}")
    return QuantumChannel.from_superoperator(Superoperator(expm(generator.matrix * t)))


def _state_matrix(state: DensityMatrix | ArrayLike) -> NDArray[np.complex128]:
    if isinstance(state, DensityMatrix):
        return state.entries
    return np.asarray(state, dtype=np.complex128)


def _project_cp(choi: NDArray[np.complex128], dim: int) -> NDArray[np.complex128]:
    """Nearest PSD Choi matrix, then one correction restoring Tr_out J = I."""
    values, vectors = np.linalg.eigh(choi)
    positive = (vectors * np.clip(values, 0.0, None)) @ vectors.conj().T
    excess = partial_trace(positive, (dim, dim), keep=0) - np.eye(dim)
    return positive - np.kron(excess / dim, np.eye(dim))


def reconstruct_channel(
    pairs: Sequence[tuple[DensityMatrix | ArrayLike, DensityMatrix | ArrayLike]],
    *,
    project_cp: bool = False,
) -> QuantumChannel:
    """Linear-inversion tomography of a map from (input, output) state pairs.

    Args:
        pairs: Input and output states; inputs must span the d²-dimensional operator space.
        project_cp (bool): Project the reconstruction onto the CP cone, then restore trace
            preservation with one alternating-projection pass.

    Returns:
        QuantumChannel: Reconstructed map; ``cp_defect`` records the negativity of the raw Choi.

    Raises:
        LabValidationError: On inconsistent dimensions or non-spanning inputs.

    """
    if not pairs:
        raise LabValidationError("at least one (input, output) pair is required")
    inputs = [_state_matrix(a) for a, _ in pairs]
    outputs = [_state_matrix(b) for _, b in pairs]
    dim = inputs[0].shape[0]
    for matrix in inputs + outputs:
        if matrix.shape != (dim, dim):
            raise LabValidationError(f"state shape {matrix.shape} does not match dim {dim}")

    x = np.column_stack([vectorize(m) for m in inputs])
    y = np.column_stack([vectorize(m) for m in outputs])
    rank = int(np.linalg.matrix_rank(x))
    if rank < dim * dim:
        raise LabValidationError(f"inputs span {rank} of {dim * dim} dimensions")

    superop = Superoperator(y @ np.linalg.pinv(x))
    choi = superop_to_choi(superop)
    cp_defect = max(0.0, -choi.min_eigenvalue())
    if project_cp and cp_defect > 0.0:
        logger.debug("Projecting reconstruction onto the CP cone (defect %.3e)", cp_defect)
        choi = ChoiMatrix(_project_cp(choi.matrix, dim))
        superop = choi_to_superop(choi)
    return QuantumChannel(superop=superop, choi=choi, cp_defect=cp_defect)


def interval_map(phi_s: QuantumChannel, phi_t: QuantumChannel) -> QuantumChannel:
    """Φ_st = Φ_t ∘ Φ_s⁻¹, the map taking the system from time s to time t.

    The result is trace preserving but need not be completely positive; its ``cp_defect``
    reports the violation.

    Raises:
        LabValidationError: On a dimension mismatch.
        IllConditionedError: If Φ_s is singular or its condition number exceeds the cap.

    """
    if phi_s.dim != phi_t.dim:
        raise LabValidationError(f"dimension mismatch: {phi_s.dim} vs {phi_t.dim}")
    condition = float(np.linalg.cond(phi_s.superop.matrix))
    cap = config_shared.get_condition_number_cap()
    if not np.isfinite(condition) or condition > cap:
        raise IllConditionedError(
            f"map at the earlier time is not invertible (condition number {condition:.3e})",
            condition_number=condition,
        )
    s = phi_s.superop.matrix
    matrix = np.linalg.solve(s.T, phi_t.superop.matrix.T).T
    result = QuantumChannel.from_superoperator(Superoperator(matrix))
    if result.cp_defect > CP_TOL:
        logger.warning("⚠️ Interval map is not CP (defect %.3e)", result.cp_defect)
    return result


def unitality_defect(phi: QuantumChannel) -> float:
    """Trace distance between Φ(I/d) and I/d."""
    mixed = np.eye(phi.dim, dtype=np.complex128) / phi.dim
    difference = phi.apply(mixed) - mixed
    eigenvalues = np.linalg.eigvalsh(0.5 * (difference + difference.conj().T))
    return float(0.5 * np.abs(eigenvalues).sum())


def pauli_transfer_matrix(phi: QuantumChannel) -> NDArray[np.float64]:
    """R_ij = ½ tr(σ_i Φ(σ_j)) of a qubit map."""
    if phi.dim != 2:
        raise LabValidationError(f"Pauli transfer matrix needs a qubit map, got dim {phi.dim}")
    outputs = [phi.apply(sigma) for sigma in PAULIS]
    return np.array(
        [[0.5 * np.trace(si @ out).real for out in outputs] for si in PAULIS], dtype=np.float64
    )


def _lift_rotation(rotation: NDArray[np.float64]) -> NDArray[np.complex128]:
    """SU(2) element whose adjoint action on (X, Y, Z) is ``rotation``."""
    x, y, z, w = Rotation.from_matrix(rotation).as_quat()
    return w * PAULIS[0] - 1j * (x * PAULIS[1] + y * PAULIS[2] + z * PAULIS[3])


def _choi_distance(a: Superoperator, b: Superoperator) -> float:
    difference = superop_to_choi(a).matrix - superop_to_choi(b).matrix
    return float(0.5 * np.abs(np.linalg.eigvalsh(difference)).sum() / a.dim)


def ru_decompose_qubit(phi: QuantumChannel) -> list[tuple[float, NDArray[np.complex128]]]:
    """Explicit random-unitary decomposition of a unital qubit CPTP map.

    The correlation block of the Pauli transfer matrix is rotated to signed-diagonal form
    T = R₁·diag(λ)·R₂ with R₁, R₂ ∈ SO(3); the map is then W₁·(Pauli mixture)·W₂ with
    probabilities (1 ± λ₁ ± λ₂ ± λ₃)/4 on the even sign patterns.

    Returns:
        list[tuple[float, NDArray]]: (probability, unitary) pairs with positive weights.

    Raises:
        LabValidationError: If the map is not a qubit map, not unital or not CP.
        DecompositionError: If the reconstruction residual reaches 1e-8.

    """
    if phi.dim != 2:
        raise LabValidationError(f"decomposition needs a qubit map, got dim {phi.dim}")
    defect = unitality_defect(phi)
    if defect >= UNITALITY_TOL:
        raise LabValidationError(f"map is not unital (defect {defect:.3e})")
    if not phi.is_completely_positive():
        minimum = phi.choi.min_eigenvalue()
        raise LabValidationError(f"map is not CP (min Choi eigenvalue {minimum:.3e})")

    block = pauli_transfer_matrix(phi)[1:, 1:]
    left, lam, right = np.linalg.svd(block)
    if np.linalg.det(left) < 0.0:
        left[:, -1] *= -1.0
        lam[-1] *= -1.0
    if np.linalg.det(right) < 0.0:
        right[-1, :] *= -1.0
        lam[-1] *= -1.0

    l1, l2, l3 = lam
    probabilities = 0.25 * np.array(
        [1 + l1 + l2 + l3, 1 + l1 - l2 - l3, 1 - l1 + l2 - l3, 1 - l1 - l2 + l3]
    )
    if probabilities.min() < -PROBABILITY_CLIP:
        logger.debug("Clipping negative Pauli weight %.3e", probabilities.min())
    probabilities = np.clip(probabilities, 0.0, None)
    probabilities /= probabilities.sum()

    w1, w2 = _lift_rotation(left), _lift_rotation(right)
    terms = [
        (float(p), w1 @ sigma @ w2)
        for p, sigma in zip(probabilities, PAULIS)
        if p > PROBABILITY_DROP
    ]
    rebuilt = kraus_to_superoperator([np.sqrt(p) * u for p, u in terms])
    residual = _choi_distance(phi.superop, rebuilt)
    if residual >= RESIDUAL_TOL:
        raise DecompositionError(f"residual {residual:.3e} too large", residual=residual)
    logger.debug("Random-unitary decomposition with %d terms, residual %.3e", len(terms), residual)
    return terms


def measure_prepare_test(phi: QuantumChannel) -> WitnessedVerdict:
    """Negativity of the normalized Choi state as a measure-and-prepare witness.

    Positive negativity (above 1e-6) rules out an entanglement-breaking map. Zero negativity
    is conclusive for qubits and inconclusive above.
    """
    state = phi.choi.matrix / phi.dim
    transposed = partial_transpose(state, (phi.dim, phi.dim))
    eigenvalues = np.linalg.eigvalsh(0.5 * (transposed + transposed.conj().T))
    witness = float(-eigenvalues[eigenvalues < 0.0].sum())
    if witness > WITNESS_THRESHOLD:
        return WitnessedVerdict(Verdict.NON_CLASSICAL, witness)
    if phi.dim == 2:
        return WitnessedVerdict(Verdict.CLASSICAL, witness)
    return WitnessedVerdict(Verdict.INCONCLUSIVE, witness)


def weyl_unitaries(dim: int) -> list[NDArray[np.complex128]]:
    """Shift-clock operators X^a Z^b, a, b = 0..d−1 (the Paulis up to phase for d = 2)."""
    if dim < 1:
        raise LabValidationError(f"dimension must be >= 1, got {dim}")
    shift = np.roll(np.eye(dim, dtype=np.complex128), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
    return [
        np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
        for a in range(dim)
        for b in range(dim)
    ]


def default_measurement_bases(dim: int) -> list[NDArray[np.complex128]]:
    """Computational and Fourier bases, plus the σ_y eigenbasis for qubits."""
    fourier = np.exp(2j * np.pi * np.outer(np.arange(dim), np.arange(dim)) / dim) / np.sqrt(dim)
    bases = [np.eye(dim, dtype=np.complex128), fourier]
    if dim == 2:
        bases.append(np.array([[1, 1], [1j, -1j]], dtype=np.complex128) / np.sqrt(2))
    return bases


def measure_prepare_dictionary(unitaries: Sequence[ArrayLike]) -> list[Superoperator]:
    """Measure-and-prepare maps built from the bases formed by each unitary's columns.

    Per basis {|u_i⟩}: dephasing in that basis, and for each i the map that measures
    trivially and prepares |u_i⟩.
    """
    dictionary = []
    for unitary in unitaries:
        basis = np.asarray(unitary, dtype=np.complex128)
        vectors = [basis[:, i] for i in range(basis.shape[1])]
        dictionary.append(kraus_to_superoperator([np.outer(v, v.conj()) for v in vectors]))
        for v in vectors:
            dictionary.append(
                kraus_to_superoperator([np.outer(v, e.conj()) for e in np.eye(basis.shape[0])])
            )
    return dictionary


def _project_simplex(v: NDArray[np.float64]) -> NDArray[np.float64]:
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    index = np.arange(1, v.size + 1)
    rho = int(np.nonzero(u - cumulative / index > 0.0)[0][-1])
    return np.clip(v - cumulative[rho] / (rho + 1), 0.0, None)


class _RelativeEntropyObjective:
    """S(ρ‖Σ w_k C_k) in nats with floored eigenvalues, and its gradient in w."""

    def __init__(
        self, target: NDArray[np.complex128], members: list[NDArray[np.complex128]]
    ) -> None:
        self.target = target
        self.members = np.array(members)
        values = np.clip(np.linalg.eigvalsh(target), 0.0, None)
        positive = values[values > 0.0]
        self.neg_entropy = float(np.sum(positive * np.log(positive)))

    def mixture(self, weights: NDArray[np.float64]) -> NDArray[np.complex128]:
        return np.tensordot(weights, self.members, axes=1)

    def value(self, weights: NDArray[np.float64]) -> float:
        values, vectors = np.linalg.eigh(self.mixture(weights))
        log_sigma = (vectors * np.log(np.clip(values, EIGENVALUE_FLOOR, None))) @ vectors.conj().T
        return self.neg_entropy - float(np.real(np.trace(self.target @ log_sigma)))

    def gradient(self, weights: NDArray[np.float64]) -> NDArray[np.float64]:
        values, vectors = np.linalg.eigh(self.mixture(weights))
        values = np.clip(values, EIGENVALUE_FLOOR, None)
        logs = np.log(values)
        gaps = values[:, None] - values[None, :]
        same = np.abs(gaps) <= 1e-12 * np.maximum(values[:, None], values[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            divided = np.where(same, 1.0 / values[:, None], (logs[:, None] - logs[None, :]) / gaps)
        rotated_target = vectors.conj().T @ self.target @ vectors
        rotated = np.einsum("ai,kab,bj->kij", vectors.conj(), self.members, vectors)
        return -np.real(np.einsum("ba,ab,kab->k", rotated_target, divided, rotated))


def fit_classical_mixture(
    phi: QuantumChannel, members: Sequence[Superoperator]
) -> MixtureFit:
    """Minimize the relative entropy of Choi states over mixtures of ``members``.

    Projected gradient descent on the probability simplex with Armijo backtracking. The
    iteration stops when the duality gap ⟨∇, w⟩ − min ∇ falls below the relative tolerance
    (or a 1e-9 floor), which bounds the suboptimality of the returned weights. If the line
    search stalls first, the last iterate is returned with ``converged=False``; its distance is
    still an upper bound, only a looser one.

    Raises:
        LabValidationError: On an empty dictionary or dimension mismatch.
        ConvergenceError: If the iteration cap is reached first.

    """
    if not members:
        raise LabValidationError("dictionary must not be empty")
    if any(m.dim != phi.dim for m in members):
        raise LabValidationError("dictionary maps must match the channel dimension")
    target = phi.choi.matrix / phi.dim
    states = [superop_to_choi(m).matrix / phi.dim for m in members]
    objective = _RelativeEntropyObjective(target, states)
    rtol = config_shared.get_optimizer_rtol()
    max_iterations = config_shared.get_optimizer_max_iterations()

    weights = np.full(len(members), 1.0 / len(members))
    current = objective.value(weights)
    step = 1.0
    converged = True
    for iteration in range(1, max_iterations + 1):
        grad = objective.gradient(weights)
        gap = float(grad @ weights - grad.min())
        if gap <= max(rtol * abs(current), OPTIMALITY_GAP_FLOOR):
            break
        for _ in range(MAX_BACKTRACKS):
            candidate = _project_simplex(weights - step * grad)
            trial = objective.value(candidate)
            if trial <= current - ARMIJO_SLOPE * float(grad @ (weights - candidate)):
                break
            step *= 0.5
        else:
            logger.warning("⚠️ Line search stalled at iteration %d with gap %.3e", iteration, gap)
            converged = False
            break
        moved = float(np.abs(candidate - weights).sum())
        weights, current = candidate, trial
        step = min(2.0 * step, 1e6)
        if moved == 0.0:
            break
    else:
        raise ConvergenceError(
            f"relative-entropy minimization did not converge in {max_iterations} iterations",
            iterations=max_iterations,
        )

    distance = relative_entropy(target, objective.mixture(weights), base=2.0)
    return MixtureFit(
        distance=distance,
        weights=weights,
        iterations=iteration,
        converged=converged,
        members=list(members),
    )


def nonclassicality_upper_bound(
    phi: QuantumChannel,
    dictionary: Sequence[ArrayLike],
    kind: ClassicalSetKind | str,
) -> float:
    """Upper bound on the relative-entropy distance (bits) from Φ to a classical family.

    Args:
        phi (QuantumChannel): Map to assess.
        dictionary (Sequence[ArrayLike]): Unitaries; for the random-unitary family they are the
            mixture members, for the measure-prepare family their columns define the bases
            of :func:`measure_prepare_dictionary`.
        kind (ClassicalSetKind | str): Classical family.

    Returns:
        float: Minimum over dictionary mixtures; ``inf`` when no mixture covers the support.

    """
    family = ClassicalSetKind(kind)
    if not dictionary:
        raise LabValidationError("dictionary must not be empty")
    if family is ClassicalSetKind.RANDOM_UNITARY:
        members = [kraus_to_superoperator([u]) for u in dictionary]
    else:
        members = measure_prepare_dictionary(dictionary)
    fit = fit_classical_mixture(phi, members)
    logger.debug("%s bound %.6g after %d iterations", family.value, fit.distance, fit.iterations)
    return fit.distance


def classicality_report(phi: QuantumChannel) -> ClassicalityReport:
    """Run both classicality tests on one map.

    The random-unitary test is non-classical on a unitality defect above 1e-6, classical when
    a qubit decomposition is certified, and inconclusive otherwise. Maps that are not CP get
    inconclusive measure-prepare verdicts and no distance bound.
    """
    defect = unitality_defect(phi)
    completely_positive = phi.is_completely_positive()
    decomposition = residual = None

    if defect > WITNESS_THRESHOLD:
        ru = WitnessedVerdict(Verdict.NON_CLASSICAL, defect)
    elif phi.dim == 2 and completely_positive:
        try:
            decomposition = ru_decompose_qubit(phi)
            rebuilt = kraus_to_superoperator([np.sqrt(p) * u for p, u in decomposition])
            residual = _choi_distance(phi.superop, rebuilt)
            ru = WitnessedVerdict(Verdict.CLASSICAL, defect)
        except (LabValidationError, DecompositionError) as e:
            logger.debug("No random-unitary certificate: %s", e)
            decomposition = None
            ru = WitnessedVerdict(Verdict.INCONCLUSIVE, defect)
    else:
        ru = WitnessedVerdict(Verdict.INCONCLUSIVE, defect)

    bound = None
    if completely_positive:
        mp = measure_prepare_test(phi)
        try:
            bound = nonclassicality_upper_bound(
                phi, weyl_unitaries(phi.dim), ClassicalSetKind.RANDOM_UNITARY
            )
        except ConvergenceError as e:
            logger.warning("⚠️ Distance bound unavailable: %s", e)
    else:
        mp = WitnessedVerdict(Verdict.INCONCLUSIVE, float("nan"))

    return ClassicalityReport(
        unitality_defect=defect,
        ru=ru,
        mp=mp,
        ru_decomposition=decomposition,
        ru_residual=residual,
        upper_bound_distance=bound,
        cp_defect=phi.cp_defect,
        note=None if completely_positive else "interval map is not completely positive",
    )


def _inconclusive(note: str) -> ClassicalityReport:
    nan = float("nan")
    return ClassicalityReport(
        unitality_defect=nan,
        ru=WitnessedVerdict(Verdict.INCONCLUSIVE, nan),
        mp=WitnessedVerdict(Verdict.INCONCLUSIVE, nan),
        note=note,
    )


def classify_trajectory(
    snapshots: Sequence[QuantumChannel], times: Sequence[float] | None = None
) -> TrajectoryClassification:
    """Classify the maps between consecutive snapshots of a dynamical map family.

    The environment action is classical at this time coarse-graining only when every interval
    carries a random-unitary certificate; it is non-classical when some interval has a
    unitality witness, and inconclusive otherwise. Intervals whose earlier map cannot be
    inverted are reported as inconclusive.

    Raises:
        LabValidationError: With fewer than two snapshots or mismatched times.

    """
    if len(snapshots) < 2:
        raise LabValidationError("classification needs at least two snapshots")
    stamps = tuple(float(t) for t in (times if times is not None else range(len(snapshots))))
    if len(stamps) != len(snapshots):
        raise LabValidationError("need one time per snapshot")

    logger.info("🚀 Classifying %d intervals", len(snapshots) - 1)
    reports = []
    for earlier, later in zip(snapshots[:-1], snapshots[1:]):
        try:
            reports.append(classicality_report(interval_map(earlier, later)))
        except IllConditionedError as e:
            logger.warning("⚠️ Interval marked inconclusive: %s", e)
            reports.append(_inconclusive(str(e)))

    verdicts = [r.ru.verdict for r in reports]
    if all(v is Verdict.CLASSICAL for v in verdicts):
        overall = Verdict.CLASSICAL
    elif any(v is Verdict.NON_CLASSICAL for v in verdicts):
        overall = Verdict.NON_CLASSICAL
    else:
        overall = Verdict.INCONCLUSIVE
    logger.info("✅ Trajectory verdict: %s", overall.value)
    return TrajectoryClassification(times=stamps, reports=tuple(reports), verdict=overall)


def _snapshot_from_dict(item: Any, index: int, project_cp: bool) -> ChannelSnapshot:
    if not isinstance(item, dict) or "time" not in item:
        raise LabValidationError(f"snapshot {index}: expected an object with a 'time' field")
    if "superop" in item:
        channel = QuantumChannel.from_superoperator(Superoperator(decode_matrix(item["superop"])))
    elif "input_states" in item and "output_states" in item:
        inputs = [decode_matrix(m) for m in item["input_states"]]
        outputs = [decode_matrix(m) for m in item["output_states"]]
        if len(inputs) != len(outputs):
            raise LabValidationError(f"snapshot {index}: input and output state counts differ")
        channel = reconstruct_channel(list(zip(inputs, outputs)), project_cp=project_cp)
    else:
        raise LabValidationError(
            f"snapshot {index}: needs 'superop' or both 'input_states' and 'output_states'"
        )
    return ChannelSnapshot(time=float(item["time"]), channel=channel)


def load_snapshots(path: str | Path, *, project_cp: bool = False) -> list[ChannelSnapshot]:
    """Read a JSON list of snapshots ordered by strictly increasing time.

    Raises:
        LabValidationError: On unreadable files, malformed JSON or unordered times.

    """
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise LabValidationError(f"cannot read snapshots {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise LabValidationError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(payload, list):
        raise LabValidationError(f"{path}: expected a JSON list of snapshots")
    snapshots = [_snapshot_from_dict(item, i, project_cp) for i, item in enumerate(payload)]
    times = [s.time for s in snapshots]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise LabValidationError(f"{path}: snapshot times must be strictly increasing")
    return snapshots


def snapshots_to_dict(snapshots: Sequence[ChannelSnapshot]) -> list[dict[str, Any]]:
    return [{"time": s.time, "superop": encode_matrix(s.channel.superop.matrix)} for s in snapshots]


def channel_family(
    kind: str,
    rate: float,
    times: Sequence[float],
    *,
    terms: int = 2,
    seed: int | None = None,
) -> list[QuantumChannel]:
    """Qubit maps Φ_t sampled at ``times`` for a named model.

    ``unitary`` rotates about x at angular frequency ``rate``; ``dephasing`` and
    ``amplitude_damping`` are Lindblad semigroups with jump σ_z and |0⟩⟨1| at ``rate``;
    ``random_unitary_mixture`` mixes ``terms`` random Hamiltonian evolutions with random
    weights and needs ``seed``.

    Raises:
        LabValidationError: On an unknown kind or a missing seed.

    """
    if kind == "random_unitary_mixture":
        if seed is None:
            raise LabValidationError("random_unitary_mixture needs a seed")
        rng = np.random.default_rng(seed)
        weights = rng.dirichlet(np.ones(terms))
        hamiltonians = []
        for _ in range(terms):
            a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            hamiltonians.append(0.5 * rate * (a + a.conj().T))
        return [
            mixed_unitary_channel(weights, [expm(-1j * h * t) for h in hamiltonians])
            for t in times
        ]

    generators = {
        "unitary": lambda: lindblad_superoperator(0.5 * rate * PAULIS[1], []),
        "dephasing": lambda: lindblad_superoperator(np.zeros((2, 2)), [(PAULIS[3], rate)]),
        "amplitude_damping": lambda: lindblad_superoperator(
            np.zeros((2, 2)), [(np.array([[0.0, 1.0], [0.0, 0.0]]), rate)]
        ),
    }
    if kind not in generators:
        raise LabValidationError(f"unknown channel family {kind!r}")
    generator = generators[kind]()
    return [semigroup_channel(generator, t) for t in times]
