"""Remote preparation of an atomic qubit through atom-photon entanglement.

Simulates the full chain: entangled atom-photon pair, spatial-mode
encoding of the photon, complete Bell analysis, conditional atomic states,
Pauli correction and three-basis tomography, analytically and by Monte
Carlo under a small parametric noise model.
"""

from .experiment import (
    NoiseCalibrator,
    SweepSpec,
    analytic_curves,
    calibrate,
    run_point,
    run_sweep,
    run_table1,
)
from .noise import NoiseParams
from .protocol import BasisConvention, BellOutcome, PhaseSetting
from .tomography import CountRecord, LinearInversionTomography, MeasBasis

__version__ = "0.1.0"

__all__ = [
    "BasisConvention",
    "BellOutcome",
    "CountRecord",
    "LinearInversionTomography",
    "MeasBasis",
    "NoiseCalibrator",
    "NoiseParams",
    "PhaseSetting",
    "SweepSpec",
    "analytic_curves",
    "calibrate",
    "run_point",
    "run_sweep",
    "run_table1",
]
