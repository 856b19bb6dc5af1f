import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomrsp import qcore
from atomrsp.qcore import DOWN_Z, SIGMA_Z, UP_X, UP_Y, UP_Z

R = 1 / np.sqrt(2)


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(rng, dim, rank=None):
    rank = rank or dim
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


angles = st.floats(0, 2 * np.pi, allow_nan=False)


@st.composite
def qubits(draw):
    theta, phase = draw(st.floats(0, np.pi)), draw(angles)
    return np.array([np.cos(theta / 2), np.exp(1j * phase) * np.sin(theta / 2)])


def test_tensor_basis_states():
    np.testing.assert_allclose(qcore.tensor(UP_Z, UP_Z), [1, 0, 0, 0])


def test_tensor_superposition():
    np.testing.assert_allclose(qcore.tensor(UP_X, DOWN_Z), [0, R, 0, R], atol=1e-15)


def test_tensor_rejects_16_dims():
    bell = np.array([R, 0, 0, R])
    with pytest.raises(qcore.DimensionError):
        qcore.tensor(bell, bell)


def test_tensor_rejects_unnormalized():
    with pytest.raises(qcore.InvalidStateError):
        qcore.tensor(np.array([1, 1]), UP_Z)


def test_tensor_associative():
    rng = np.random.default_rng(1)
    a, b, c = (random_state(rng, 2) for _ in range(3))
    np.testing.assert_allclose(
        qcore.tensor(qcore.tensor(a, b), c), qcore.tensor(a, qcore.tensor(b, c)), atol=1e-12
    )


@pytest.mark.parametrize(
    "psi, expected",
    [
        (UP_Z, [[1, 0], [0, 0]]),
        (UP_X, [[0.5, 0.5], [0.5, 0.5]]),
        (UP_Y, [[0.5, -0.5j], [0.5j, 0.5]]),
    ],
)
def test_density_of(psi, expected):
    np.testing.assert_allclose(qcore.density_of(psi), expected, atol=1e-15)


def test_density_of_is_rank_one():
    rng = np.random.default_rng(2)
    for dim in (2, 4, 8):
        rho = qcore.density_of(random_state(rng, dim))
        ev = np.sort(np.linalg.eigvalsh(rho))
        assert ev[-2] < 1e-9
        assert abs(np.trace(rho) - 1) < 1e-12


@pytest.mark.parametrize(
    "target, rho, expected",
    [
        (UP_Z, np.eye(2) / 2, 0.5),
        (UP_Z, np.diag([0.0, 1.0]), 0.0),
        (np.array([R, 0, 0, R]), np.outer([R, 0, 0, R], [R, 0, 0, R]), 1.0),
    ],
)
def test_fidelity_pure(target, rho, expected):
    assert qcore.fidelity_pure(target, rho) == pytest.approx(expected, abs=1e-12)


def test_fidelity_dimension_mismatch():
    with pytest.raises(qcore.DimensionError):
        qcore.fidelity_pure(UP_Z, np.eye(4) / 4)


@given(qubits())
def test_density_fidelity_roundtrip(psi):
    assert qcore.fidelity_pure(psi, qcore.density_of(psi)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize(
    "rho, expected",
    [
        (np.eye(2) / 2, (0, 0, 0)),
        (np.diag([1, 0]), (0, 0, 1)),
        (np.outer(UP_Y, UP_Y.conj()), (0, 1, 0)),
        (np.outer(UP_X, UP_X.conj()), (1, 0, 0)),
    ],
)
def test_bloch_of(rho, expected):
    np.testing.assert_allclose(qcore.bloch_of(rho), expected, atol=1e-15)


def test_bloch_of_maximally_mixed_is_exact_zero():
    assert np.all(qcore.bloch_of(np.eye(2) / 2) == 0)


def test_bloch_of_rejects_two_qubits():
    with pytest.raises(qcore.DimensionError):
        qcore.bloch_of(np.eye(4) / 4)


@settings(max_examples=50)
@given(qubits(), qubits(), st.floats(0, 1))
def test_bloch_is_linear(a, b, w):
    ra, rb = qcore.density_of(a), qcore.density_of(b)
    mixed = qcore.bloch_of(w * ra + (1 - w) * rb)
    np.testing.assert_allclose(mixed, w * qcore.bloch_of(ra) + (1 - w) * qcore.bloch_of(rb), atol=1e-12)
    assert np.dot(mixed, mixed) <= 1 + 1e-9


def test_eig2_sigma_z():
    vals, vecs = qcore.eig2(SIGMA_Z)
    np.testing.assert_allclose(vals, [1, -1])
    assert qcore.state_fidelity(vecs[:, 0], UP_Z) == pytest.approx(1)
    assert qcore.state_fidelity(vecs[:, 1], DOWN_Z) == pytest.approx(1)


def test_eig2_degenerate_returns_canonical_pair():
    vals, vecs = qcore.eig2(np.eye(2) / 2)
    np.testing.assert_allclose(vals, [0.5, 0.5])
    np.testing.assert_array_equal(vecs, np.eye(2))


def test_eig2_against_quadratic_formula():
    h = np.array([[0.75, 0.25], [0.25, 0.25]])
    # roots of x^2 - x + (0.75*0.25 - 0.25^2) = 0
    disc = np.sqrt(1 - 4 * (0.75 * 0.25 - 0.0625))
    expected = [(1 + disc) / 2, (1 - disc) / 2]
    vals, _ = qcore.eig2(h)
    np.testing.assert_allclose(vals, expected, atol=1e-12)
    np.testing.assert_allclose(vals, [0.25 * (2 + np.sqrt(2)), 0.25 * (2 - np.sqrt(2))], atol=1e-12)
    np.testing.assert_allclose(vals, np.linalg.eigvalsh(h)[::-1], atol=1e-12)


def test_eig2_rejects_non_hermitian():
    with pytest.raises(qcore.InvalidStateError):
        qcore.eig2(np.array([[0, 1], [0, 0]]))


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_eig2_reconstructs_input(a, d, br, bi):
    h = np.array([[a, br + 1j * bi], [br - 1j * bi, d]])
    vals, vecs = qcore.eig2(h)
    assert vals[0] >= vals[1]
    np.testing.assert_allclose(vecs.conj().T @ vecs, np.eye(2), atol=1e-9)
    np.testing.assert_allclose((vecs * vals) @ vecs.conj().T, h, atol=1e-9)


def test_partial_trace_of_product_state():
    rng = np.random.default_rng(3)
    ra, rb, rc = random_density(rng, 2), random_density(rng, 2), random_density(rng, 2)
    full = np.kron(np.kron(ra, rb), rc)
    np.testing.assert_allclose(qcore.partial_trace(full, (2, 2, 2), [0]), ra, atol=1e-12)
    np.testing.assert_allclose(qcore.partial_trace(full, (2, 2, 2), [1]), rb, atol=1e-12)
    np.testing.assert_allclose(qcore.partial_trace(full, (2, 2, 2), [0, 2]), np.kron(ra, rc), atol=1e-12)
    np.testing.assert_allclose(qcore.partial_trace(full, (2, 4), [1]), np.kron(rb, rc), atol=1e-12)


def test_check_density_rejects_negative_eigenvalue():
    with pytest.raises(qcore.InvalidStateError):
        qcore.check_density(np.diag([1.2, -0.2]))


def test_check_state_rejects_nan():
    with pytest.raises(qcore.InvalidStateError):
        qcore.check_state([np.nan, 0])


def test_trace_distance_orthogonal_states():
    assert qcore.trace_distance(np.diag([1, 0]), np.diag([0, 1])) == pytest.approx(1.0)
