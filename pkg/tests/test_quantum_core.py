import numpy as np
import pytest

from exciton_lab.errors import LabValidationError
from exciton_lab.quantum_core import (
    ChoiMatrix,
    DensityMatrix,
    Superoperator,
    choi_superop_convert,
    choi_to_superop,
    decode_matrix,
    encode_matrix,
    hermitian_eigensystem,
    kraus_to_superoperator,
    lindblad_superoperator,
    negativity,
    partial_trace,
    random_channel_superoperator,
    random_density_matrix,
    relative_entropy,
    superop_to_choi,
    trace_distance,
    unvectorize,
    vectorize,
)

pytestmark = pytest.mark.unit


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def test_vectorize_is_column_stacking(rng):
    a, x, b = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
    lhs = vectorize(a @ x @ b)
    rhs = np.kron(b.T, a) @ vectorize(x)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
    np.testing.assert_allclose(unvectorize(vectorize(x), 3), x)


def test_density_matrix_rejects_unphysical_input():
    with pytest.raises(LabValidationError, match="Hermitian"):
        DensityMatrix(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(LabValidationError, match="trace"):
        DensityMatrix(np.eye(2))
    with pytest.raises(LabValidationError, match="negative eigenvalue"):
        DensityMatrix(np.diag([1.5, -0.5]))


def test_density_matrix_from_array_clips_round_off():
    rho = DensityMatrix.from_array(np.diag([1.0 + 1e-12, -1e-12]))
    assert rho.min_eigenvalue() >= 0.0
    assert np.trace(rho.entries).real == pytest.approx(1.0, abs=1e-14)


def test_density_matrix_is_immutable():
    rho = DensityMatrix.basis(3, 1)
    with pytest.raises(ValueError):
        rho.entries[0, 0] = 1.0


def test_choi_conversion_is_an_involution(rng):
    superop = random_channel_superoperator(3, rng, kraus_rank=2)
    choi = choi_superop_convert(superop)
    assert isinstance(choi, ChoiMatrix)
    back = choi_superop_convert(choi)
    np.testing.assert_allclose(back.matrix, superop.matrix, atol=1e-12)
    assert choi.min_eigenvalue() > -1e-12
    assert np.trace(choi.matrix).real == pytest.approx(3.0)


def test_identity_channel_choi_is_rank_one():
    choi = superop_to_choi(Superoperator.identity(2))
    eigenvalues = np.linalg.eigvalsh(choi.matrix)
    np.testing.assert_allclose(eigenvalues, [0.0, 0.0, 0.0, 2.0], atol=1e-12)
    np.testing.assert_allclose(choi_to_superop(choi).matrix, np.eye(4))


def test_choi_conversion_rejects_other_types():
    with pytest.raises(LabValidationError):
        choi_superop_convert(np.eye(4))


def test_kraus_superoperator_applies_amplitude_damping():
    p = 0.3
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1 - p)]])
    k1 = np.array([[0.0, np.sqrt(p)], [0.0, 0.0]])
    superop = kraus_to_superoperator([k0, k1])
    out = superop.apply(DensityMatrix.basis(2, 1))
    np.testing.assert_allclose(out, np.diag([p, 1 - p]), atol=1e-14)
    assert superop.is_trace_preserving()


def test_superoperator_rejects_dimension_mismatch():
    with pytest.raises(LabValidationError, match="does not match"):
        Superoperator.identity(2).apply(np.eye(3) / 3)
    with pytest.raises(LabValidationError, match="perfect square"):
        Superoperator(np.eye(3))


def test_trace_distance_of_orthogonal_states():
    assert trace_distance(DensityMatrix.basis(2, 0), DensityMatrix.basis(2, 1)) == pytest.approx(1)
    rho = DensityMatrix.maximally_mixed(2)
    assert trace_distance(rho, rho) == pytest.approx(0.0)
    with pytest.raises(LabValidationError):
        trace_distance(rho, DensityMatrix.maximally_mixed(3))


def test_negativity_of_bell_state():
    bell = DensityMatrix.pure(np.array([1.0, 0.0, 0.0, 1.0]))
    assert negativity(bell, (2, 2)) == pytest.approx(0.5)
    product = DensityMatrix.basis(4, 0)
    assert negativity(product, (2, 2)) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(LabValidationError):
        negativity(bell, (3, 2))


def test_partial_trace_of_product_state(rng):
    a = random_density_matrix(2, rng).entries
    b = random_density_matrix(3, rng).entries
    joint = np.kron(a, b)
    np.testing.assert_allclose(partial_trace(joint, (2, 3), keep=0), a, atol=1e-12)
    np.testing.assert_allclose(partial_trace(joint, (2, 3), keep=1), b, atol=1e-12)


def test_relative_entropy_values():
    assert relative_entropy(np.diag([1.0, 0.0]), np.eye(2) / 2) == pytest.approx(1.0)
    assert relative_entropy(np.eye(2) / 2, np.eye(2) / 2) == pytest.approx(0.0, abs=1e-14)
    assert relative_entropy(np.eye(2) / 2, np.diag([1.0, 0.0])) == float("inf")


def test_hermitian_eigensystem_validates_input():
    values, vectors = hermitian_eigensystem(np.array([[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(values, [1.0, 3.0])
    np.testing.assert_allclose(vectors.conj().T @ vectors, np.eye(2), atol=1e-12)
    with pytest.raises(LabValidationError):
        hermitian_eigensystem(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_lindblad_generator_preserves_trace():
    h = np.array([[0.0, 1.0], [1.0, 0.5]])
    jump = np.array([[0.0, 1.0], [0.0, 0.0]])
    generator = lindblad_superoperator(h, [(jump, 0.7), (np.diag([1.0, -1.0]), 0.2)])
    leak = generator.matrix.conj().T @ vectorize(np.eye(2))
    np.testing.assert_allclose(leak, 0.0, atol=1e-14)
    with pytest.raises(LabValidationError, match="non-negative"):
        lindblad_superoperator(h, [(jump, -1.0)])


def test_matrix_json_encoding():
    matrix = np.array([[1.0, 2.0 - 1.0j], [2.0 + 1.0j, 0.0]])
    payload = encode_matrix(matrix)
    assert payload[0][1] == [2.0, -1.0]
    np.testing.assert_array_equal(decode_matrix(payload), matrix)
    np.testing.assert_array_equal(decode_matrix([[1, 0], [0, 1]]), np.eye(2))
    with pytest.raises(LabValidationError):
        decode_matrix([[[1.0, 2.0, 3.0]]])


def test_werner_state_at_the_separability_threshold():
    bell = np.outer([1.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 1.0]) / 2.0

    def werner(p):
        return DensityMatrix(p * bell + (1.0 - p) * np.eye(4) / 4.0)

    assert negativity(werner(1.0 / 3.0), (2, 2)) == pytest.approx(0.0, abs=1e-12)
    assert negativity(werner(0.5), (2, 2)) == pytest.approx(0.125)


def test_trace_distance_is_a_metric(rng):
    up = DensityMatrix(np.diag([1.0, 0.0]))
    assert trace_distance(up, DensityMatrix.maximally_mixed(2)) == pytest.approx(0.5)
    for _ in range(20):
        a, b, c = (random_density_matrix(3, rng) for _ in range(3))
        assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12
        assert trace_distance(a, b) == pytest.approx(trace_distance(b, a))


def test_hermitian_eigensystem_residual(rng):
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    m = a + a.conj().T
    values, vectors = hermitian_eigensystem(m)
    assert np.all(np.diff(values) >= 0.0)
    np.testing.assert_allclose(m @ vectors, vectors * values, atol=1e-10)
    np.testing.assert_allclose(vectors.conj().T @ vectors, np.eye(8), atol=1e-12)
