"""Imperfection channels for the preparation pipeline."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import qcore


@dataclass(frozen=True)
class NoiseParams:
    """Knobs of the error model.

    entanglement_fidelity: Bell fidelity of the atom-photon pair (Werner mixing).
    bsa_visibility: coherence kept between the spatial modes a/b.
    dephasing_tau: atomic coherence time in microseconds.
    readout_depolarization: depolarizing weight applied at atomic readout.
    readout_delay: time in microseconds between photon detection and readout.
    """

    entanglement_fidelity: float = 0.87
    bsa_visibility: float = 0.96
    dephasing_tau: float = 10.0
    readout_depolarization: float = 0.0
    readout_delay: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{f.name} must be a finite number, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        if not 0.25 <= self.entanglement_fidelity <= 1.0:
            raise ValueError("entanglement_fidelity must lie in [0.25, 1]")
        if not 0.0 <= self.bsa_visibility <= 1.0:
            raise ValueError("bsa_visibility must lie in [0, 1]")
        if self.dephasing_tau <= 0.0:
            raise ValueError("dephasing_tau must be positive")
        if not 0.0 <= self.readout_depolarization <= 1.0:
            raise ValueError("readout_depolarization must lie in [0, 1]")
        if self.readout_delay < 0.0:
            raise ValueError("readout_delay must be non-negative")

    @classmethod
    def ideal(cls) -> "NoiseParams":
        return cls(entanglement_fidelity=1.0, bsa_visibility=1.0, readout_depolarization=0.0)

    @property
    def werner_weight(self) -> float:
        return werner_weight(self.entanglement_fidelity)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown noise parameter(s): {sorted(unknown)}")
        return cls(**data)


def werner_weight(fidelity: float) -> float:
    """Weight p of the pure Bell component giving Bell fidelity ``fidelity``."""
    return (4.0 * fidelity - 1.0) / 3.0


def werner_mix(bell, target_fidelity: float) -> np.ndarray:
    if not 0.25 <= target_fidelity <= 1.0:
        raise ValueError(f"target_fidelity {target_fidelity!r} outside [0.25, 1]")
    bell = qcore.check_state(bell, (4,))
    p = werner_weight(target_fidelity)
    return p * qcore.density_of(bell) + (1.0 - p) * np.eye(4, dtype=complex) / 4.0


def apply_visibility(spatial, visibility: float) -> np.ndarray:
    """Density matrix of the spatial qubit with its a/b coherence scaled."""
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility {visibility!r} outside [0, 1]")
    rho = qcore.density_of(qcore.check_state(spatial, (2,)))
    rho[0, 1] *= visibility
    rho[1, 0] *= visibility
    return rho


def dephasing_factor(t: float, tau: float, envelope: str = "gaussian") -> float:
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau!r}")
    if t < 0.0:
        raise ValueError(f"t must be non-negative, got {t!r}")
    if math.isinf(t):
        return 0.0
    if envelope == "gaussian":
        return math.exp(-((t / tau) ** 2))
    if envelope == "exponential":
        return math.exp(-t / tau)
    raise ValueError(f"unknown dephasing envelope {envelope!r}")


def dephase_atom(rho, t: float, tau: float, envelope: str = "gaussian") -> np.ndarray:
    """Shrink the z-basis coherences of an atomic density matrix."""
    rho = qcore.check_density(rho, 2).copy()
    k = dephasing_factor(t, tau, envelope)
    rho[0, 1] *= k
    rho[1, 0] *= k
    return rho


def depolarize(rho, d: float) -> np.ndarray:
    if not 0.0 <= d <= 1.0:
        raise ValueError(f"depolarization {d!r} outside [0, 1]")
    rho = qcore.check_density(rho, 2)
    return (1.0 - d) * rho + d * qcore.IDENTITY2 / 2.0


def atom_readout_channel(rho, noise: NoiseParams) -> np.ndarray:
    """Dephasing over the readout delay followed by readout depolarization."""
    rho = dephase_atom(rho, noise.readout_delay, noise.dephasing_tau)
    return depolarize(rho, noise.readout_depolarization)
