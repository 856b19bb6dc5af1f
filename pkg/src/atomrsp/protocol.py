"""Ideal remote-state-preparation pipeline.

Global basis ordering is atom (up, down)_z x polarization (H, V) x spatial
mode (a, b), so index ``4*atom + 2*pol + mode`` addresses the 8-dim joint
space.

The four conditional atomic states are labelled 1..4 in the usual order:

    Phi1 = e^{i phi} cos(alpha/2) |u> + sin(alpha/2) |d>
    Phi2 = e^{i phi} cos(alpha/2) |u> - sin(alpha/2) |d>
    Phi3 = e^{i phi} cos(alpha/2) |d> - sin(alpha/2) |u>
    Phi4 = e^{i phi} cos(alpha/2) |d> + sin(alpha/2) |u>

with ``|u> = |up>_x`` and ``|d> = -i |down>_x``.  The ``-i`` is what the
atom-photon state actually produces once the circular polarizations are
written in H/V; it puts Phi1(alpha=90, phi=0) at +y and gives Phi1 the Bloch
vector (cos a, sin a cos p, -sin a sin p).  In this frame Phi3 is undone by
sigma_z and Phi4 by sigma_y.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .qcore import DOWN_X, DOWN_Z, IDENTITY2, SIGMA_X, SIGMA_Y, SIGMA_Z, UP_X, UP_Z

_SQRT_HALF = 1.0 / math.sqrt(2.0)

H = np.array([1, 0], dtype=complex)
V = np.array([0, 1], dtype=complex)
MODE_A = np.array([1, 0], dtype=complex)
MODE_B = np.array([0, 1], dtype=complex)

# x-frame in which the conditional states take the form above
FRAME_UP = UP_X
FRAME_DOWN = -1j * DOWN_X


class ConventionError(RuntimeError):
    """The outcome map could not be derived for the active convention."""


@dataclass(frozen=True)
class BasisConvention:
    """How circular polarizations are written in the H/V basis.

    ``sign=+1`` means ``|sigma+-> = (|H> +- i|V>)/sqrt(2)``; ``sign=-1`` flips
    the imaginary part.
    """

    sign: int = 1
    description: str = "|sigma+-> = (|H> +- i*s|V>)/sqrt(2)"

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"convention sign must be +1 or -1, got {self.sign!r}")

    def sigma_plus(self) -> np.ndarray:
        return _SQRT_HALF * (H + 1j * self.sign * V)

    def sigma_minus(self) -> np.ndarray:
        return _SQRT_HALF * (H - 1j * self.sign * V)

    def to_dict(self) -> dict:
        return {"sign": self.sign, "description": self.description}


DEFAULT_CONVENTION = BasisConvention()


def _norm_angle(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"angle must be finite, got {x!r}")
    x = math.fmod(x, 360.0)
    if x < 0.0:
        x += 360.0
    return 0.0 if x == 360.0 else x


@dataclass(frozen=True)
class PhaseSetting:
    """Interferometer phases in degrees, normalized into [0, 360)."""

    alpha: float
    phi: float = 0.0
    alpha_rad: float = field(init=False, repr=False, compare=False)
    phi_rad: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", _norm_angle(self.alpha))
        object.__setattr__(self, "phi", _norm_angle(self.phi))
        object.__setattr__(self, "alpha_rad", math.radians(self.alpha))
        object.__setattr__(self, "phi_rad", math.radians(self.phi))


class BellOutcome(enum.Enum):
    """Bell-analyzer outcomes; the value is the APD number."""

    PSI_PLUS = 1
    PSI_MINUS = 2
    PHI_PLUS = 3
    PHI_MINUS = 4

    @property
    def detector_id(self) -> int:
        return self.value

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_detector(cls, detector_id: int) -> "BellOutcome":
        return cls(int(detector_id))

    @classmethod
    def from_label(cls, label: str) -> "BellOutcome":
        for outcome, name in _LABELS.items():
            if name == label:
                return outcome
        raise ValueError(f"unknown Bell outcome {label!r}")


_LABELS = {
    BellOutcome.PSI_PLUS: "PsiPlus",
    BellOutcome.PSI_MINUS: "PsiMinus",
    BellOutcome.PHI_PLUS: "PhiPlus",
    BellOutcome.PHI_MINUS: "PhiMinus",
}


@dataclass(frozen=True)
class ConditionalState:
    outcome: BellOutcome
    probability: float
    atom_state: np.ndarray | None  # None when the outcome has zero weight

    @property
    def defined(self) -> bool:
        return self.atom_state is not None


def entangled_atom_photon(convention: BasisConvention = DEFAULT_CONVENTION) -> np.ndarray:
    """(|down>_z|sigma+> + |up>_z|sigma->)/sqrt(2) in atom x (H, V) order."""
    psi = _SQRT_HALF * (
        np.kron(DOWN_Z, convention.sigma_plus()) + np.kron(UP_Z, convention.sigma_minus())
    )
    return qcore.check_state(psi)


def spatial_encoding(setting: PhaseSetting) -> np.ndarray:
    a, p = setting.alpha_rad, setting.phi_rad
    return np.array([np.exp(1j * p) * math.cos(a / 2), math.sin(a / 2)], dtype=complex)


def joint_state(atom_pol, spatial) -> np.ndarray:
    """atom_pol (4x4 density) tensored with a spatial state or density (2 or 2x2)."""
    atom_pol = qcore.check_density(atom_pol, 4)
    spatial = np.asarray(spatial, dtype=complex)
    if spatial.ndim == 1:
        spatial = qcore.density_of(qcore.check_state(spatial, (2,)))
    else:
        spatial = qcore.check_density(spatial, 2)
    return np.kron(atom_pol, spatial)


def bell_states() -> dict[BellOutcome, np.ndarray]:
    """Bell basis of the polarization x spatial space, (H, V) x (a, b) order."""
    va = np.kron(V, MODE_A)
    hb = np.kron(H, MODE_B)
    ha = np.kron(H, MODE_A)
    vb = np.kron(V, MODE_B)
    return {
        BellOutcome.PSI_PLUS: _SQRT_HALF * (va + hb),
        BellOutcome.PSI_MINUS: _SQRT_HALF * (va - hb),
        BellOutcome.PHI_PLUS: _SQRT_HALF * (ha + vb),
        BellOutcome.PHI_MINUS: _SQRT_HALF * (ha - vb),
    }


def bell_projectors() -> dict[BellOutcome, np.ndarray]:
    return {k: np.outer(v, v.conj()) for k, v in bell_states().items()}


def measure_bell(joint, min_probability: float = 1e-12) -> list[ConditionalState]:
    """Project the photon onto each Bell state and return the atomic remainder.

    Outcomes below ``min_probability`` are reported with probability 0 and
    no atomic state.
    """
    joint = qcore.check_density(joint, 8)
    out = []
    for outcome, proj in bell_projectors().items():
        big = np.kron(IDENTITY2, proj)
        post = big @ joint @ big
        p = float(np.trace(post).real)
        if p < min_probability:
            out.append(ConditionalState(outcome, 0.0, None))
            continue
        atom = qcore.partial_trace(post, (2, 4), keep=[0]) / p
        atom = 0.5 * (atom + atom.conj().T)
        out.append(ConditionalState(outcome, p, atom))
    return out


def conditional_states(setting: PhaseSetting) -> list[np.ndarray]:
    """The four expected atomic states [Phi1, Phi2, Phi3, Phi4]."""
    c = math.cos(setting.alpha_rad / 2)
    s = math.sin(setting.alpha_rad / 2)
    e = np.exp(1j * setting.phi_rad)
    u, d = FRAME_UP, FRAME_DOWN
    return [
        e * c * u + s * d,
        e * c * u - s * d,
        e * c * d - s * u,
        e * c * d + s * u,
    ]


def target_state(setting: PhaseSetting) -> np.ndarray:
    return conditional_states(setting)[0]


def target_bloch(setting: PhaseSetting) -> np.ndarray:
    """Polar coordinates about +x: (cos a, sin a cos p, -sin a sin p)."""
    a, p = setting.alpha_rad, setting.phi_rad
    return np.array([math.cos(a), math.sin(a) * math.cos(p), -math.sin(a) * math.sin(p)])


def ideal_joint(setting: PhaseSetting, convention: BasisConvention = DEFAULT_CONVENTION):
    return joint_state(
        qcore.density_of(entangled_atom_photon(convention)), spatial_encoding(setting)
    )


def derivation_grid() -> list[PhaseSetting]:
    """Settings used to derive the outcome and correction tables."""
    return [PhaseSetting(a, p) for a in (20.0, 75.0, 130.0, 250.0) for p in (0.0, 50.0, 200.0)]


def derive_outcome_map(convention: BasisConvention = DEFAULT_CONVENTION, grid=None):
    """Match each Bell outcome's ideal atomic state against Phi1..Phi4.

    Candidates are intersected over the grid (settings with sin or cos of
    alpha/2 equal to zero make some formulas coincide).  Each outcome must
    end with exactly one formula and the result must be a bijection;
    anything else raises ConventionError.
    """
    grid = derivation_grid() if grid is None else list(grid)
    candidates = {o: {1, 2, 3, 4} for o in BellOutcome}
    for setting in grid:
        expected = conditional_states(setting)
        for cond in measure_bell(ideal_joint(setting, convention)):
            hits = {
                k + 1
                for k, phi_k in enumerate(expected)
                if qcore.fidelity_pure(phi_k, cond.atom_state) > 1 - 1e-9
            }
            candidates[cond.outcome] &= hits
            if not candidates[cond.outcome]:
                raise ConventionError(
                    f"{cond.outcome.label} at {setting} matches none of the four formulas"
                )
    for outcome, ks in candidates.items():
        if len(ks) != 1:
            raise ConventionError(f"{outcome.label} is ambiguous over the grid: {sorted(ks)}")
    mapping = {o: ks.pop() for o, ks in candidates.items()}
    if sorted(mapping.values()) != [1, 2, 3, 4]:
        raise ConventionError(f"outcome map is not a bijection: {mapping}")
    return mapping


@functools.lru_cache(maxsize=4)
def _cached_outcome_map(convention: BasisConvention):
    return tuple(sorted(derive_outcome_map(convention).items(), key=lambda kv: kv[0].value))


def outcome_map(convention: BasisConvention = DEFAULT_CONVENTION) -> dict[BellOutcome, int]:
    return dict(_cached_outcome_map(convention))


def outcome_for_index(k: int, convention: BasisConvention = DEFAULT_CONVENTION) -> BellOutcome:
    for outcome, idx in outcome_map(convention).items():
        if idx == k:
            return outcome
    raise KeyError(k)


# Unitary bringing Phi_k back to Phi1, up to global phase.
CORRECTION_BY_INDEX = {1: IDENTITY2, 2: SIGMA_X, 3: SIGMA_Z, 4: SIGMA_Y}


def pauli_correction(outcome: BellOutcome, convention: BasisConvention = DEFAULT_CONVENTION):
    return CORRECTION_BY_INDEX[outcome_map(convention)[outcome]].copy()
