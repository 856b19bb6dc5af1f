"""Small dense linear algebra for one to three qubits.

States are 1-d complex numpy arrays, operators and density matrices are
2-d complex arrays.  Nothing here goes beyond dimension 8; the helpers
validate their inputs and return fresh arrays.

Basis conventions (atomic qubit, z basis first)::

    |up>_x, |down>_x = (|up>_z +- |down>_z) / sqrt(2)
    |up>_y, |down>_y = (|up>_z +- i|down>_z) / sqrt(2)
"""

from __future__ import annotations

import numpy as np

TOL = 1e-9
SUPPORTED_DIMS = (2, 4, 8)

_SQRT_HALF = 1.0 / np.sqrt(2.0)

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

UP_Z = np.array([1, 0], dtype=complex)
DOWN_Z = np.array([0, 1], dtype=complex)
UP_X = _SQRT_HALF * (UP_Z + DOWN_Z)
DOWN_X = _SQRT_HALF * (UP_Z - DOWN_Z)
UP_Y = _SQRT_HALF * (UP_Z + 1j * DOWN_Z)
DOWN_Y = _SQRT_HALF * (UP_Z - 1j * DOWN_Z)


class DimensionError(ValueError):
    """Raised for a Hilbert-space dimension outside the supported set."""


class InvalidStateError(ValueError):
    """Raised when an array violates a state or operator invariant."""


def check_state(psi, dims=SUPPORTED_DIMS) -> np.ndarray:
    """Validate a normalized state vector and return it as a complex array."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise InvalidStateError(f"state must be 1-d, got shape {psi.shape}")
    if psi.shape[0] not in dims:
        raise DimensionError(f"unsupported state dimension {psi.shape[0]}")
    if not np.all(np.isfinite(psi)):
        raise InvalidStateError("state has non-finite amplitudes")
    norm2 = float(np.vdot(psi, psi).real)
    if abs(norm2 - 1.0) > TOL:
        raise InvalidStateError(f"state not normalized (|psi|^2 = {norm2!r})")
    return psi


def _check_square(op, dim=None) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise InvalidStateError(f"operator must be square, got shape {op.shape}")
    if op.shape[0] not in SUPPORTED_DIMS:
        raise DimensionError(f"unsupported operator dimension {op.shape[0]}")
    if dim is not None and op.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {op.shape[0]}")
    if not np.all(np.isfinite(op)):
        raise InvalidStateError("operator has non-finite entries")
    return op


def is_hermitian(op, tol=TOL) -> bool:
    op = np.asarray(op)
    return bool(np.allclose(op, op.conj().T, rtol=0.0, atol=tol))


def is_unitary(op, tol=TOL) -> bool:
    op = np.asarray(op)
    return bool(np.allclose(op @ op.conj().T, np.eye(op.shape[0]), rtol=0.0, atol=tol))


def check_hermitian(op, dim=None) -> np.ndarray:
    op = _check_square(op, dim)
    if not is_hermitian(op):
        raise InvalidStateError("operator is not Hermitian")
    return op


def check_unitary(op, dim=None) -> np.ndarray:
    op = _check_square(op, dim)
    if not is_unitary(op):
        raise InvalidStateError("operator is not unitary")
    return op


def check_density(rho, dim=None) -> np.ndarray:
    """Validate a density operator: Hermitian, unit trace, positive semidefinite."""
    rho = check_hermitian(rho, dim)
    tr = np.trace(rho)
    if abs(tr - 1.0) > TOL:
        raise InvalidStateError(f"density operator trace is {tr!r}")
    if np.linalg.eigvalsh(rho).min() < -TOL:
        raise InvalidStateError("density operator has a negative eigenvalue")
    return rho


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two states, first factor major."""
    a = check_state(a)
    b = check_state(b)
    if a.shape[0] * b.shape[0] not in (4, 8):
        raise DimensionError(
            f"tensor product dimension {a.shape[0] * b.shape[0]} not supported"
        )
    return np.kron(a, b)


def density_of(psi) -> np.ndarray:
    psi = check_state(psi)
    return np.outer(psi, psi.conj())


def fidelity_pure(target, rho) -> float:
    """Overlap <target|rho|target>, clamped to [0, 1]."""
    target = check_state(target)
    rho = _check_square(rho)
    if rho.shape[0] != target.shape[0]:
        raise DimensionError(
            f"dimension mismatch: target {target.shape[0]}, rho {rho.shape[0]}"
        )
    value = np.vdot(target, rho @ target)
    if abs(value.imag) > TOL:
        raise InvalidStateError(f"fidelity has imaginary part {value.imag!r}")
    return float(min(1.0, max(0.0, value.real)))


def state_fidelity(a, b) -> float:
    """|<a|b>|^2 for two pure states; insensitive to global phase."""
    a = check_state(a)
    b = check_state(b)
    if a.shape != b.shape:
        raise DimensionError("dimension mismatch")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def bloch_of(rho) -> np.ndarray:
    """Bloch vector (<sx>, <sy>, <sz>) of a single-qubit density operator."""
    rho = _check_square(rho, 2)
    return np.array([np.trace(rho @ p).real for p in PAULIS])


def density_from_bloch(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise InvalidStateError(f"Bloch vector must have 3 components, got {r.shape}")
    return 0.5 * (IDENTITY2 + r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z)


def bloch_of_state(psi) -> np.ndarray:
    return bloch_of(density_of(check_state(psi, (2,))))


def eig2(herm):
    """Closed-form eigendecomposition of a 2x2 Hermitian matrix.

    Returns ``(values, vectors)`` with values sorted descending and
    ``vectors[:, k]`` the unit eigenvector for ``values[k]``.  When the
    eigenvalue gap is below 1e-12 the canonical basis is returned; the
    threshold is on the gap, not its square, so reconstruction stays
    within 1e-9 of the input.
    """
    h = check_hermitian(herm, 2)
    a = h[0, 0].real
    d = h[1, 1].real
    b = h[0, 1]
    mean = 0.5 * (a + d)
    half_gap = 0.5 * (a - d)
    disc = half_gap * half_gap + abs(b) ** 2
    root = np.sqrt(disc)
    if root < 1e-12:
        return np.array([mean, mean]), np.eye(2, dtype=complex)
    values = np.array([mean + root, mean - root])
    # (b, lam - a) and (lam - d, conj(b)) both solve (H - lam) v = 0; pick
    # whichever has the larger norm to stay away from cancellation.
    vectors = np.empty((2, 2), dtype=complex)
    for k, lam in enumerate(values):
        v1 = np.array([b, lam - a])
        v2 = np.array([lam - d, np.conj(b)])
        v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
        vectors[:, k] = v / np.linalg.norm(v)
    return values, vectors


def partial_trace(rho, dims, keep) -> np.ndarray:
    """Trace out every subsystem of ``rho`` not listed in ``keep``."""
    rho = _check_square(rho)
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != rho.shape[0]:
        raise DimensionError(f"subsystem dims {dims} do not match {rho.shape[0]}")
    keep = sorted(set(keep))
    n = len(dims)
    t = rho.reshape(dims + dims)
    # trace from the highest index down so earlier axis numbers stay valid
    for i in reversed(range(n)):
        if i not in keep:
            t = np.trace(t, axis1=i, axis2=i + t.ndim // 2)
    kept = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(kept, kept)


def trace_distance(rho, sigma) -> float:
    diff = np.asarray(rho, dtype=complex) - np.asarray(sigma, dtype=complex)
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def apply_unitary(u, rho) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    return u @ np.asarray(rho, dtype=complex) @ u.conj().T
