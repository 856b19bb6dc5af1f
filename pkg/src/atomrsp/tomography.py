"""Three-basis single-qubit tomography with finite statistics."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import qcore
from .qcore import IDENTITY2, SIGMA_X, SIGMA_Y, SIGMA_Z, UP_X, UP_Y, UP_Z


class MeasBasis(enum.Enum):
    X = "x"
    Y = "y"
    Z = "z"

    @property
    def pauli(self) -> np.ndarray:
        return {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}[self.value]

    @property
    def up(self) -> np.ndarray:
        return {"x": UP_X, "y": UP_Y, "z": UP_Z}[self.value]

    @property
    def axis(self) -> int:
        return "xyz".index(self.value)

    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        up = 0.5 * (IDENTITY2 + self.pauli)
        return up, IDENTITY2 - up


BASES = (MeasBasis.X, MeasBasis.Y, MeasBasis.Z)


@dataclass(frozen=True)
class CountRecord:
    basis: MeasBasis
    n_up: int
    n_total: int

    def __post_init__(self):
        object.__setattr__(self, "basis", MeasBasis(self.basis))
        if int(self.n_total) != self.n_total or int(self.n_up) != self.n_up:
            raise ValueError("counts must be integers")
        object.__setattr__(self, "n_up", int(self.n_up))
        object.__setattr__(self, "n_total", int(self.n_total))
        if self.n_total <= 0:
            raise ValueError("n_total must be positive")
        if not 0 <= self.n_up <= self.n_total:
            raise ValueError(f"n_up={self.n_up} outside [0, {self.n_total}]")

    @property
    def rate(self) -> float:
        return self.n_up / self.n_total

    @property
    def rate_err(self) -> float:
        p = self.rate
        return float(np.sqrt(p * (1.0 - p) / self.n_total))


@dataclass(frozen=True)
class TomographyResult:
    rho: np.ndarray
    fidelity: float
    fidelity_err: float
    records: tuple[CountRecord, CountRecord, CountRecord]


def up_probability(rho, basis: MeasBasis) -> float:
    rho = qcore.check_density(rho, 2)
    p = float(np.trace(basis.projectors()[0] @ rho).real)
    return min(1.0, max(0.0, p))


def simulate_counts(rho, basis: MeasBasis, n: int, rng: np.random.Generator) -> CountRecord:
    """Draw ``n`` projective measurements of ``rho`` in ``basis``."""
    if n <= 0:
        raise ValueError(f"n must be positive, got {n!r}")
    basis = MeasBasis(basis)
    p = up_probability(rho, basis)
    return CountRecord(basis, int(rng.binomial(n, p)), n)


def _ordered(records) -> tuple[CountRecord, CountRecord, CountRecord]:
    by_basis: dict[MeasBasis, CountRecord] = {}
    for rec in records:
        if rec.basis in by_basis:
            raise ValueError(f"duplicate record for basis {rec.basis.value}")
        by_basis[rec.basis] = rec
    missing = [b.value for b in BASES if b not in by_basis]
    if missing:
        raise ValueError(f"missing record(s) for basis {missing}")
    return tuple(by_basis[b] for b in BASES)


def raw_bloch(records) -> np.ndarray:
    """Linear-inversion Bloch vector, possibly outside the unit ball."""
    return np.array([2.0 * r.rate - 1.0 for r in _ordered(records)])


def project_physical(rho) -> np.ndarray:
    """Clamp negative eigenvalues to zero and renormalize the trace."""
    values, vecs = qcore.eig2(rho)
    if values[1] >= 0.0:
        return np.asarray(rho, dtype=complex)
    values = np.clip(values, 0.0, None)
    values = values / values.sum()
    return (vecs * values) @ vecs.conj().T


def reconstruct(records) -> np.ndarray:
    s = raw_bloch(records)
    return project_physical(qcore.density_from_bloch(s))


def _clamp_bloch(s: np.ndarray) -> np.ndarray:
    # eigenvalues of (I + s.sigma)/2 are (1 +- |s|)/2, so clamping and
    # renormalizing is the same as pulling s back onto the unit sphere
    norm = np.linalg.norm(s, axis=-1, keepdims=True)
    return np.where(norm > 1.0, s / np.where(norm > 0, norm, 1.0), s)


def bootstrap_fidelities(records, target, B: int, rng: np.random.Generator) -> np.ndarray:
    """Fidelities of ``B`` parametric-bootstrap replicates of ``records``."""
    recs = _ordered(records)
    t = qcore.bloch_of_state(target)
    n = np.array([r.n_total for r in recs])
    p = np.array([r.rate for r in recs])
    k = rng.binomial(n, p, size=(B, 3))
    s = _clamp_bloch(2.0 * k / n - 1.0)
    return np.clip(0.5 * (1.0 + s @ t), 0.0, 1.0)


def analyze(records, target, bootstrap_B: int = 1000, rng=None) -> TomographyResult:
    """Reconstruct, score against ``target`` and attach a bootstrap error bar.

    ``rng`` is a Generator or anything ``np.random.default_rng`` accepts.
    """
    if bootstrap_B < 100:
        raise ValueError(f"bootstrap_B must be at least 100, got {bootstrap_B}")
    recs = _ordered(records)
    rho = reconstruct(recs)
    fid = qcore.fidelity_pure(target, rho)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    boots = bootstrap_fidelities(recs, target, bootstrap_B, rng)
    return TomographyResult(rho, fid, float(np.std(boots, ddof=1)), recs)


def records_from_array(X) -> tuple[CountRecord, CountRecord, CountRecord]:
    """Rows ``(n_up, n_total)`` in x, y, z order."""
    X = check_array(X, dtype=None, ensure_min_samples=3)
    if X.shape != (3, 2):
        raise ValueError(f"expected a (3, 2) count array, got {X.shape}")
    return tuple(CountRecord(b, row[0], row[1]) for b, row in zip(BASES, X))


class LinearInversionTomography(BaseEstimator):
    """Estimator front end for :func:`reconstruct` and :func:`analyze`.

    ``fit`` takes either three CountRecords or a (3, 2) array of
    ``(n_up, n_total)`` rows in x, y, z order.
    """

    def __init__(self, bootstrap_B: int = 1000, random_state=None):
        self.bootstrap_B = bootstrap_B
        self.random_state = random_state

    def fit(self, X, y=None):
        if len(X) and isinstance(X[0], CountRecord):
            recs = _ordered(X)
        else:
            recs = records_from_array(X)
        self.records_ = recs
        self.raw_bloch_ = raw_bloch(recs)
        self.rho_ = reconstruct(recs)
        self.bloch_ = qcore.bloch_of(self.rho_)
        return self

    def predict_proba(self, bases=BASES) -> np.ndarray:
        """Up-outcome probabilities of the reconstructed state per basis."""
        check_is_fitted(self, "rho_")
        return np.array([up_probability(self.rho_, MeasBasis(b)) for b in bases])

    def fidelity(self, target) -> TomographyResult:
        check_is_fitted(self, "rho_")
        return analyze(self.records_, target, self.bootstrap_B, self.random_state)

    def score(self, target, y=None) -> float:
        check_is_fitted(self, "rho_")
        return qcore.fidelity_pure(target, self.rho_)
