"""Linear-algebra and quantum-information primitives shared by every laboratory module.

Conventions used throughout the package:

- Operators are vectorized by column stacking, ``vec(A X B) = (Bᵀ ⊗ A) vec(X)``.
- Choi matrices are ordered input ⊗ output, ``J = Σ |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)``, so the identity
  channel has trace ``dim`` and complete positivity is equivalent to ``J ⪰ 0``.
- Complex matrices serialize to JSON as row-major nested lists of ``[re, im]`` pairs.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import unitary_group

from exciton_lab.errors import LabValidationError

ComplexMatrix = NDArray[np.complex128]

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
EIGEN_INPUT_TOL = 1e-10
CHOI_HERMITIAN_TOL = 1e-8


def _square(matrix: ArrayLike, name: str = "matrix") -> ComplexMatrix:
    array = np.array(matrix, dtype=np.complex128)
    if array.ndim != 2 or array.shape[0] != array.shape[1] or array.shape[0] == 0:
        raise LabValidationError(f"{name} must be a non-empty square matrix, got {array.shape}")
    return array


def _frozen(array: NDArray[Any]) -> NDArray[Any]:
    array = np.array(array, copy=True)
    array.flags.writeable = False
    return array


def _hermiticity_defect(matrix: ComplexMatrix) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def _scale(matrix: ComplexMatrix) -> float:
    return max(1.0, float(np.max(np.abs(matrix))))


def _isqrt_dim(size: int, name: str) -> int:
    dim = int(round(np.sqrt(size)))
    if dim * dim != size:
        raise LabValidationError(f"{name} side {size} is not a perfect square")
    return dim


def vectorize(matrix: ArrayLike) -> NDArray[np.complex128]:
    """Column-stack a square matrix into a vector."""
    return np.asarray(matrix, dtype=np.complex128).reshape(-1, order="F")


def unvectorize(vector: ArrayLike, dim: int) -> ComplexMatrix:
    """Inverse of :func:`vectorize`."""
    return np.asarray(vector, dtype=np.complex128).reshape(dim, dim, order="F")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite state.

    Construction validates Hermiticity to 1e-12, trace to 1e-10 and eigenvalues to ≥ −1e-10.
    Use :meth:`from_array` for integrator or tomography output that needs clipping.
    """

    entries: ComplexMatrix

    def __post_init__(self) -> None:
        matrix = _square(self.entries, "density matrix")
        if _hermiticity_defect(matrix) > HERMITIAN_TOL * _scale(matrix):
            raise LabValidationError("density matrix is not Hermitian")
        trace = np.trace(matrix)
        if abs(trace - 1.0) > TRACE_TOL:
            raise LabValidationError(f"density matrix trace {trace.real:.12g} differs from 1")
        min_eig = float(np.linalg.eigvalsh(matrix)[0])
        if min_eig < -POSITIVITY_TOL:
            raise LabValidationError(f"density matrix has negative eigenvalue {min_eig:.3e}")
        object.__setattr__(self, "entries", _frozen(matrix))

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @classmethod
    def from_array(cls, matrix: ArrayLike) -> "DensityMatrix":
        """Build a state from a nearly physical matrix.

        The matrix is Hermitized, eigenvalues in [−1e-10, 0) are clipped to zero and the
        result renormalized. Larger violations raise.
        """
        array = _square(matrix, "density matrix")
        array = 0.5 * (array + array.conj().T)
        values, vectors = np.linalg.eigh(array)
        if values[0] < -POSITIVITY_TOL:
            raise LabValidationError(f"density matrix has negative eigenvalue {values[0]:.3e}")
        values = np.clip(values, 0.0, None)
        total = float(values.sum())
        if total <= 0.0:
            raise LabValidationError("density matrix has zero trace")
        return cls((vectors * (values / total)) @ vectors.conj().T)

    @classmethod
    def pure(cls, vector: ArrayLike) -> "DensityMatrix":
        """Projector onto a normalized copy of ``vector``."""
        psi = np.asarray(vector, dtype=np.complex128).ravel()
        norm = np.linalg.norm(psi)
        if norm == 0.0:
            raise LabValidationError("state vector has zero norm")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, dim: int, index: int) -> "DensityMatrix":
        """Projector |index⟩⟨index| in a ``dim``-dimensional space (0-based)."""
        if not 0 <= index < dim:
            raise LabValidationError(f"basis index {index} outside 0..{dim - 1}")
        matrix = np.zeros((dim, dim), dtype=np.complex128)
        matrix[index, index] = 1.0
        return cls(matrix)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=np.complex128) / dim)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Linear map on column-stacked operators of a ``dim``-dimensional space."""

    matrix: ComplexMatrix
    dim: int = field(init=False)

    def __post_init__(self) -> None:
        matrix = _square(self.matrix, "superoperator")
        object.__setattr__(self, "dim", _isqrt_dim(matrix.shape[0], "superoperator"))
        object.__setattr__(self, "matrix", _frozen(matrix))

    @classmethod
    def identity(cls, dim: int) -> "Superoperator":
        return cls(np.eye(dim * dim, dtype=np.complex128))

    def apply(self, rho: "DensityMatrix | ArrayLike") -> ComplexMatrix:
        """Apply the map to an operator and return the output matrix."""
        operator = rho.entries if isinstance(rho, DensityMatrix) else _square(rho, "operator")
        if operator.shape[0] != self.dim:
            raise LabValidationError(
                f"operator dimension {operator.shape[0]} does not match map dimension {self.dim}"
            )
        return unvectorize(self.matrix @ vectorize(operator), self.dim)

    def compose(self, first: "Superoperator") -> "Superoperator":
        """Return ``self ∘ first`` (``first`` acts before ``self``)."""
        if first.dim != self.dim:
            raise LabValidationError("cannot compose maps of different dimension")
        return Superoperator(self.matrix @ first.matrix)

    def trace_preservation_defect(self) -> float:
        """Largest deviation of the adjoint map applied to the identity from the identity."""
        vec_identity = vectorize(np.eye(self.dim))
        return float(np.max(np.abs(self.matrix.conj().T @ vec_identity - vec_identity)))

    def is_trace_preserving(self, tol: float = 1e-10) -> bool:
        return self.trace_preservation_defect() <= tol


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Choi–Jamiolkowski matrix ordered input ⊗ output.

    Hermitian by construction (Hermiticity-preserving maps only); the trace equals ``dim`` for
    trace-preserving maps.
    """

    matrix: ComplexMatrix
    dim: int = field(init=False)

    def __post_init__(self) -> None:
        matrix = _square(self.matrix, "Choi matrix")
        object.__setattr__(self, "dim", _isqrt_dim(matrix.shape[0], "Choi matrix"))
        if _hermiticity_defect(matrix) > CHOI_HERMITIAN_TOL * _scale(matrix):
            raise LabValidationError("Choi matrix is not Hermitian")
        object.__setattr__(self, "matrix", _frozen(0.5 * (matrix + matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


def _reshuffle(matrix: ComplexMatrix) -> ComplexMatrix:
    # Involution between superoperator and Choi index orders.
    d = _isqrt_dim(matrix.shape[0], "matrix")
    shuffled = matrix.reshape(d, d, d, d).transpose(3, 1, 2, 0)
    return np.ascontiguousarray(shuffled.reshape(d * d, d * d))


def choi_superop_convert(x: Superoperator | ChoiMatrix) -> Superoperator | ChoiMatrix:
    """Convert between superoperator and Choi representations by exact index reshuffling.

    Args:
        x (Superoperator | ChoiMatrix): Map in either representation.

    Returns:
        Superoperator | ChoiMatrix: The same map in the other representation.

    Raises:
        LabValidationError: If the input is neither representation.

    """
    if isinstance(x, Superoperator):
        return ChoiMatrix(_reshuffle(x.matrix))
    if isinstance(x, ChoiMatrix):
        return Superoperator(_reshuffle(x.matrix))
    raise LabValidationError(f"expected Superoperator or ChoiMatrix, got {type(x).__name__}")


def superop_to_choi(superop: Superoperator) -> ChoiMatrix:
    return ChoiMatrix(_reshuffle(superop.matrix))


def choi_to_superop(choi: ChoiMatrix) -> Superoperator:
    return Superoperator(_reshuffle(choi.matrix))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Return ½‖a − b‖₁ computed from singular values.

    Raises:
        LabValidationError: On dimension mismatch.

    """
    if a.dim != b.dim:
        raise LabValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    singular_values = np.linalg.svd(a.entries - b.entries, compute_uv=False)
    return float(min(1.0, max(0.0, 0.5 * singular_values.sum())))


def partial_transpose(matrix: ArrayLike, dims: tuple[int, int]) -> ComplexMatrix:
    """Partial transpose over the second subsystem of a bipartite operator."""
    d1, d2 = dims
    array = _square(matrix)
    if array.shape[0] != d1 * d2:
        raise LabValidationError(f"dimension {array.shape[0]} does not factor as {d1}×{d2}")
    return array.reshape(d1, d2, d1, d2).transpose(0, 3, 2, 1).reshape(d1 * d2, d1 * d2)


def negativity(rho: DensityMatrix, dims: tuple[int, int]) -> float:
    """Sum of |negative eigenvalues| of the partial transpose over the second subsystem.

    Raises:
        LabValidationError: If ``dims`` does not factor the state dimension.

    """
    if len(dims) != 2 or min(dims) < 1 or dims[0] * dims[1] != rho.dim:
        raise LabValidationError(f"dims {tuple(dims)} do not factor dimension {rho.dim}")
    transposed = partial_transpose(rho.entries, (int(dims[0]), int(dims[1])))
    eigenvalues = np.linalg.eigvalsh(0.5 * (transposed + transposed.conj().T))
    return float(-eigenvalues[eigenvalues < 0.0].sum())


def partial_trace(matrix: ArrayLike, dims: tuple[int, int], keep: int) -> ComplexMatrix:
    """Trace out one factor of a bipartite operator, keeping subsystem ``keep`` (0 or 1)."""
    d1, d2 = dims
    array = _square(matrix).reshape(d1, d2, d1, d2)
    if keep == 0:
        return np.einsum("ijkj->ik", array)
    if keep == 1:
        return np.einsum("ijil->jl", array)
    raise LabValidationError(f"keep must be 0 or 1, got {keep}")


def hermitian_eigensystem(m: ArrayLike) -> tuple[NDArray[np.float64], ComplexMatrix]:
    """Eigen-decompose a Hermitian matrix.

    Args:
        m (ArrayLike): Hermitian matrix (to 1e-10 relative to its largest entry).

    Returns:
        tuple: Ascending eigenvalues and a unitary matrix of eigenvectors in its columns.

    Raises:
        LabValidationError: If the input is not Hermitian.

    """
    matrix = _square(m)
    if _hermiticity_defect(matrix) > EIGEN_INPUT_TOL * _scale(matrix):
        raise LabValidationError("matrix is not Hermitian")
    values, vectors = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    return values.astype(np.float64), vectors


def relative_entropy(rho: ArrayLike, sigma: ArrayLike, base: float = 2.0) -> float:
    """Quantum relative entropy S(ρ‖σ) with 0·log 0 = 0.

    Returns ``inf`` when the support of ρ is not contained in the support of σ.
    """
    a = _square(rho, "rho")
    b = _square(sigma, "sigma")
    if a.shape != b.shape:
        raise LabValidationError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    rho_values, rho_vectors = np.linalg.eigh(0.5 * (a + a.conj().T))
    sigma_values, sigma_vectors = np.linalg.eigh(0.5 * (b + b.conj().T))
    support_tol = 1e-12 * max(1.0, float(np.max(np.abs(sigma_values))))

    kernel = sigma_vectors[:, sigma_values <= support_tol]
    if kernel.shape[1] and float(np.real(np.trace(kernel.conj().T @ a @ kernel))) > 1e-12:
        return float("inf")

    rho_values = np.clip(rho_values, 0.0, None)
    positive = rho_values > 0.0
    entropy_term = float(np.sum(rho_values[positive] * np.log(rho_values[positive])))

    support = sigma_values > support_tol
    overlap = np.abs(sigma_vectors[:, support].conj().T @ rho_vectors) ** 2
    log_sigma = np.log(sigma_values[support])
    cross_term = float(np.sum(log_sigma[:, None] * overlap * rho_values[None, :]))
    return max(0.0, (entropy_term - cross_term) / np.log(base))


def kraus_to_superoperator(kraus: Sequence[ArrayLike]) -> Superoperator:
    """Superoperator Σ conj(K) ⊗ K of a Kraus representation."""
    operators = [_square(k, "Kraus operator") for k in kraus]
    if not operators:
        raise LabValidationError("at least one Kraus operator is required")
    return Superoperator(sum(np.kron(k.conj(), k) for k in operators))


def lindblad_superoperator(
    hamiltonian: ArrayLike, jumps: Sequence[tuple[ArrayLike, float]]
) -> Superoperator:
    """Column-stacked Lindblad generator.

    ``L = −i(I⊗H − Hᵀ⊗I) + Σ r [conj(A)⊗A − ½ I⊗A†A − ½ (A†A)ᵀ⊗I]`` for jump operators ``A``
    with rates ``r``, i.e. ``D[A]ρ = AρA† − ½{A†A, ρ}`` scaled by the rate.
    """
    h = _square(hamiltonian, "Hamiltonian")
    identity = np.eye(h.shape[0], dtype=np.complex128)
    generator = -1j * (np.kron(identity, h) - np.kron(h.T, identity))
    for operator, rate in jumps:
        if rate < 0:
            raise LabValidationError(f"jump rate must be non-negative, got {rate}")
        if rate == 0:
            continue
        a = _square(operator, "jump operator")
        ada = a.conj().T @ a
        generator = generator + rate * (
            np.kron(a.conj(), a) - 0.5 * np.kron(identity, ada) - 0.5 * np.kron(ada.T, identity)
        )
    return Superoperator(generator)


def random_unitary(dim: int, rng: np.random.Generator) -> ComplexMatrix:
    """Haar-random unitary."""
    if dim == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1), dtype=np.complex128)
    return np.asarray(unitary_group.rvs(dim, random_state=rng), dtype=np.complex128)


def random_density_matrix(
    dim: int, rng: np.random.Generator, rank: int | None = None
) -> DensityMatrix:
    """Random state from the induced (Ginibre) measure."""
    columns = dim if rank is None else rank
    ginibre = rng.normal(size=(dim, columns)) + 1j * rng.normal(size=(dim, columns))
    matrix = ginibre @ ginibre.conj().T
    return DensityMatrix.from_array(matrix / np.trace(matrix).real)


def random_channel_superoperator(
    dim: int, rng: np.random.Generator, kraus_rank: int = 2
) -> Superoperator:
    """Random CPTP map from the first ``dim`` columns of a Haar-random isometry."""
    isometry = random_unitary(dim * kraus_rank, rng)[:, :dim]
    kraus = [isometry[k * dim : (k + 1) * dim, :] for k in range(kraus_rank)]
    return kraus_to_superoperator(kraus)


def encode_matrix(matrix: ArrayLike) -> list[list[list[float]]]:
    """Row-major nested list of ``[re, im]`` pairs."""
    array = np.asarray(matrix, dtype=np.complex128)
    if array.ndim != 2:
        raise LabValidationError(f"expected a 2-D matrix, got shape {array.shape}")
    return [[[float(z.real), float(z.imag)] for z in row] for row in array]


def decode_matrix(payload: Any) -> ComplexMatrix:
    """Inverse of :func:`encode_matrix`; plain real entries are also accepted."""
    try:
        rows = [[_decode_entry(item) for item in row] for row in payload]
        array = np.array(rows, dtype=np.complex128)
    except (TypeError, ValueError, IndexError) as e:
        raise LabValidationError(f"malformed matrix payload: {e}") from e
    if array.ndim != 2:
        raise LabValidationError(f"matrix payload must be 2-D, got shape {array.shape}")
    return array


def _decode_entry(item: Any) -> complex:
    if isinstance(item, (list, tuple)):
        if len(item) != 2:
            raise ValueError(f"expected [re, im] pair, got {item!r}")
        return complex(float(item[0]), float(item[1]))
    return complex(item)
