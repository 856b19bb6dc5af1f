"""Sweeps, reference-set runs, analytic curves and noise calibration.

Random streams: every draw comes from its own generator seeded with
``SeedSequence(master_seed, spawn_key=(set_id, point_index, detector_id, slot))``
where slot 0..2 are the x, y, z count draws and slot 3 is the bootstrap.
A point's numbers depend only on its key, so serial and threaded runs
produce identical output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import noise as noise_mod
from . import protocol, qcore, tomography
from .noise import NoiseParams
from .protocol import DEFAULT_CONVENTION, BasisConvention, BellOutcome, PhaseSetting
from .tomography import BASES, MeasBasis

# Reported per-set means and one-sigma errors
REFERENCE_SETS = {1: (0.826, 0.0040), 2: (0.797, 0.0065), 3: (0.842, 0.0045), 4: (0.822, 0.0046)}
REFERENCE_OVERALL_MEAN = 0.822
REFERENCE_VERIFICATION = 0.87
REFERENCE_DISTINCT_STATES = 42

BOOTSTRAP_SLOT = 3


def angle_range(start: float, stop: float, step: float) -> list[float]:
    """Inclusive ``start..stop`` in ``step`` increments (degrees)."""
    if step <= 0 or not all(math.isfinite(v) for v in (start, stop, step)):
        raise ValueError(f"bad angle range {start}:{stop}:{step}")
    if stop < start:
        raise ValueError(f"range stop {stop} below start {start}")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [start + i * step for i in range(n + 1)]


def table1_sets() -> dict[int, list[PhaseSetting]]:
    steps = angle_range(0.0, 330.0, 30.0)
    return {
        1: [PhaseSetting(90.0, p) for p in steps],
        2: [PhaseSetting(a, 0.0) for a in steps],
        3: [PhaseSetting(a, 90.0) for a in steps],
        4: [PhaseSetting(109.5, p) for p in steps],
    }


def distinct_state_count(settings, tol: float = 1e-6) -> int:
    """Number of distinct target states, merging Bloch vectors closer than ``tol``."""
    seen: list[np.ndarray] = []
    for s in settings:
        r = qcore.bloch_of_state(protocol.target_state(s))
        if not any(np.max(np.abs(r - q)) < tol for q in seen):
            seen.append(r)
    return len(seen)


def substream(master_seed: int, *key: int) -> np.random.Generator:
    if master_seed < 0:
        raise ValueError("master_seed must be non-negative")
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(seq)


# -- analytic pipeline ------------------------------------------------------


def noisy_joint(setting: PhaseSetting, noise: NoiseParams,
                convention: BasisConvention = DEFAULT_CONVENTION) -> np.ndarray:
    atom_pol = noise_mod.werner_mix(
        protocol.entangled_atom_photon(convention), noise.entanglement_fidelity
    )
    spatial = noise_mod.apply_visibility(protocol.spatial_encoding(setting), noise.bsa_visibility)
    return protocol.joint_state(atom_pol, spatial)


def prepared_states(setting: PhaseSetting, noise: NoiseParams,
                    convention: BasisConvention = DEFAULT_CONVENTION):
    """(outcome, probability, corrected atomic density) for each Bell outcome.

    The atom dephases and is depolarized at readout before the Pauli
    correction is applied; the correction is bookkeeping on the analysis
    side, not a physical pulse.
    """
    out = []
    for cond in protocol.measure_bell(noisy_joint(setting, noise, convention)):
        if not cond.defined:
            raise ValueError(f"outcome {cond.outcome.label} has zero probability")
        rho = noise_mod.atom_readout_channel(cond.atom_state, noise)
        u = protocol.pauli_correction(cond.outcome, convention)
        out.append((cond.outcome, cond.probability, qcore.apply_unitary(u, rho)))
    return out


def analytic_fidelities(setting: PhaseSetting, noise: NoiseParams,
                        convention: BasisConvention = DEFAULT_CONVENTION) -> dict:
    target = protocol.target_state(setting)
    return {
        outcome: qcore.fidelity_pure(target, rho)
        for outcome, _, rho in prepared_states(setting, noise, convention)
    }


def analytic_set_mean(settings, noise: NoiseParams,
                      convention: BasisConvention = DEFAULT_CONVENTION) -> float:
    vals = [f for s in settings for f in analytic_fidelities(s, noise, convention).values()]
    return float(np.mean(vals))


def verification_fidelity(noise: NoiseParams,
                          convention: BasisConvention = DEFAULT_CONVENTION) -> float:
    """Bell fidelity of the atom-photon pair as seen through the atomic readout."""
    bell = protocol.entangled_atom_photon(convention)
    rho = noise_mod.werner_mix(bell, noise.entanglement_fidelity)
    k = noise_mod.dephasing_factor(noise.readout_delay, noise.dephasing_tau)
    # dephasing and depolarizing act on the atom factor only
    mask = np.ones((4, 4))
    mask[:2, 2:] = mask[2:, :2] = k
    rho = rho * mask
    d = noise.readout_depolarization
    photon = qcore.partial_trace(rho, (2, 2), keep=[1])
    rho = (1 - d) * rho + d * np.kron(qcore.IDENTITY2 / 2, photon)
    return qcore.fidelity_pure(bell, rho)


def analytic_curves(alpha: float, phis, convention: BasisConvention = DEFAULT_CONVENTION):
    """Ideal uncorrected probabilities p(up_z), p(down_x), p(up_y) per outcome.

    Rows are dicts ordered by phi, then state index 1..4, then basis z, x, y.
    """
    rows = []
    p_down_x = lambda rho: 1.0 - tomography.up_probability(rho, MeasBasis.X)  # noqa: E731
    for phi in phis:
        setting = PhaseSetting(alpha, phi)
        conds = {c.outcome: c for c in protocol.measure_bell(protocol.ideal_joint(setting, convention))}
        for k in (1, 2, 3, 4):
            outcome = protocol.outcome_for_index(k, convention)
            rho = conds[outcome].atom_state
            for basis, prob in (
                ("z", tomography.up_probability(rho, MeasBasis.Z)),
                ("x", p_down_x(rho)),
                ("y", tomography.up_probability(rho, MeasBasis.Y)),
            ):
                rows.append({
                    "phi_deg": float(phi),
                    "outcome": outcome,
                    "state_index": k,
                    "basis": basis,
                    "probability": prob,
                })
    return rows


# -- Monte Carlo ------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    points: tuple
    events_per_point_per_basis: int = 300
    noise: NoiseParams = field(default_factory=NoiseParams)
    master_seed: int = 0
    bootstrap_B: int = 1000
    set_id: int = 1
    convention: BasisConvention = DEFAULT_CONVENTION

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise ValueError("a sweep needs at least one point")
        if self.events_per_point_per_basis < 1:
            raise ValueError("events_per_point_per_basis must be >= 1")
        if self.master_seed < 0 or self.master_seed >= 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class OutcomeResult:
    outcome: BellOutcome
    tomography: tomography.TomographyResult
    analytic_target: np.ndarray
    expected_fidelity: float

    @property
    def fidelity(self) -> float:
        return self.tomography.fidelity


@dataclass(frozen=True)
class PointResult:
    setting: PhaseSetting
    point_index: int
    per_outcome: tuple[OutcomeResult, ...]


@dataclass(frozen=True)
class SweepSummary:
    set_id: int
    mean_fidelity: float
    mean_fidelity_err: float
    per_point: tuple[PointResult, ...]

    @property
    def fidelities(self) -> np.ndarray:
        return np.array([o.fidelity for p in self.per_point for o in p.per_outcome])

    @classmethod
    def from_points(cls, set_id: int, points) -> "SweepSummary":
        points = tuple(points)
        fids = np.array([o.fidelity for p in points for o in p.per_outcome])
        errs = np.array([o.tomography.fidelity_err for p in points for o in p.per_outcome])
        return cls(
            set_id,
            float(fids.mean()),
            float(np.sqrt(np.sum(errs**2)) / errs.size),
            points,
        )


def run_point(setting: PhaseSetting, spec: SweepSpec, point_index: int = 0) -> PointResult:
    target = protocol.target_state(setting)
    n = spec.events_per_point_per_basis
    results = []
    for outcome, _, rho in prepared_states(setting, spec.noise, spec.convention):
        key = (spec.set_id, point_index, outcome.detector_id)
        records = [
            tomography.simulate_counts(rho, basis, n, substream(spec.master_seed, *key, slot))
            for slot, basis in enumerate(BASES)
        ]
        tomo = tomography.analyze(
            records, target, spec.bootstrap_B, substream(spec.master_seed, *key, BOOTSTRAP_SLOT)
        )
        results.append(OutcomeResult(outcome, tomo, target, qcore.fidelity_pure(target, rho)))
    return PointResult(setting, point_index, tuple(results))


def run_sweep(spec: SweepSpec, n_jobs: int = 1) -> SweepSummary:
    indexed = list(enumerate(spec.points))
    if n_jobs == 1:
        points = [run_point(s, spec, i) for i, s in indexed]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as pool:
            points = list(pool.map(lambda item: run_point(item[1], spec, item[0]), indexed))
    return SweepSummary.from_points(spec.set_id, points)


@dataclass(frozen=True)
class Table1Result:
    summaries: dict
    distinct_states: int

    @property
    def overall_mean(self) -> float:
        return float(np.mean(np.concatenate([s.fidelities for s in self.summaries.values()])))

    @property
    def overall_mean_err(self) -> float:
        errs = [s.mean_fidelity_err for s in self.summaries.values()]
        return float(np.sqrt(np.sum(np.square(errs))) / len(errs))


def run_table1(noise: NoiseParams, seed: int, events: int = 300, bootstrap_B: int = 1000,
               n_jobs: int = 1, convention: BasisConvention = DEFAULT_CONVENTION) -> Table1Result:
    sets = table1_sets()
    summaries = {
        set_id: run_sweep(
            SweepSpec(points, events, noise, seed, bootstrap_B, set_id, convention), n_jobs
        )
        for set_id, points in sets.items()
    }
    all_points = [p for pts in sets.values() for p in pts]
    return Table1Result(summaries, distinct_state_count(all_points))


# -- calibration ------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationResult:
    params: NoiseParams
    targets: dict
    predicted: dict
    residuals: dict
    tolerance: float

    @property
    def adequate(self) -> bool:
        return all(abs(r) <= self.tolerance for r in self.residuals.values())

    @property
    def effective_weight(self) -> float:
        """Werner weight times (1 - depolarization): the only combination the
        targets constrain when dephasing is off."""
        return self.params.werner_weight * (1.0 - self.params.readout_depolarization)

    def budget(self) -> dict:
        pred = self.predicted
        return {
            "werner_weight": self.params.werner_weight,
            "readout_depolarization": self.params.readout_depolarization,
            "effective_weight": self.effective_weight,
            "bsa_visibility": self.params.bsa_visibility,
            "verification_fidelity": pred["verification"],
            "set1_mean": pred["set1_mean"],
            "overall_mean": pred["overall_mean"],
            "preparation_over_verification": pred["set1_mean"] / pred["verification"],
        }


def _bilinear_corners(func, base: NoiseParams):
    """Values of ``func`` at Werner weight p in {0, 1} and depolarization d in {0, 1}.

    Every channel is affine in p and in d separately, so these four numbers
    determine ``func`` everywhere on the (p, d) square.
    """
    out = np.empty((2, 2))
    for i, f_ent in enumerate((0.25, 1.0)):
        for j, d in enumerate((0.0, 1.0)):
            out[i, j] = func(_replace(base, entanglement_fidelity=f_ent, readout_depolarization=d))
    return out


def _bilinear(corners, p, d):
    return ((1 - p) * (1 - d) * corners[0, 0] + (1 - p) * d * corners[0, 1]
            + p * (1 - d) * corners[1, 0] + p * d * corners[1, 1])


def _replace(params: NoiseParams, **kw) -> NoiseParams:
    data = params.to_dict()
    data.update(kw)
    return NoiseParams(**data)


def default_search_space() -> dict:
    return {
        "entanglement_fidelity": np.linspace(0.25, 1.0, 301),
        "readout_depolarization": np.linspace(0.0, 1.0, 201),
    }


def calibrate(targets=(0.826, REFERENCE_VERIFICATION), visibility: float = 0.96,
              fixed_depolarization: float | None = None, search_space: dict | None = None,
              base: NoiseParams | None = None, tolerance: float = 0.02,
              convention: BasisConvention = DEFAULT_CONVENTION) -> CalibrationResult:
    """Fit entanglement fidelity and readout depolarization to two targets.

    ``targets`` is (set-1 mean fidelity, atom-photon verification fidelity).
    Both are evaluated on the density-matrix pipeline; a grid search is
    followed by a bounded 1-d refinement of the entanglement fidelity.
    Ties along the degenerate valley go to the smallest depolarization.
    """
    t_set1, t_verif = (float(t) for t in targets)
    space = default_search_space() if search_space is None else search_space
    f_grid = np.asarray(space.get("entanglement_fidelity", []), dtype=float)
    d_grid = (np.array([fixed_depolarization], dtype=float) if fixed_depolarization is not None
              else np.asarray(space.get("readout_depolarization", []), dtype=float))
    if f_grid.size == 0 or d_grid.size == 0:
        raise ValueError("empty search space")
    if f_grid.min() < 0.25 or f_grid.max() > 1.0 or d_grid.min() < 0.0 or d_grid.max() > 1.0:
        raise ValueError("search space outside parameter bounds")

    base = _replace(base or NoiseParams(), bsa_visibility=visibility)
    sets = table1_sets()
    set1 = _bilinear_corners(lambda nz: analytic_set_mean(sets[1], nz, convention), base)
    overall = _bilinear_corners(
        lambda nz: analytic_set_mean([s for pts in sets.values() for s in pts], nz, convention), base
    )
    verif = _bilinear_corners(lambda nz: verification_fidelity(nz, convention), base)

    def loss(f_ent, d):
        p = noise_mod.werner_weight(f_ent)
        return (_bilinear(set1, p, d) - t_set1) ** 2 + (_bilinear(verif, p, d) - t_verif) ** 2

    f_grid = np.sort(f_grid)
    step = float(np.max(np.diff(f_grid))) if f_grid.size > 1 else 0.0
    profile = []  # (loss, d, f) with f optimized for each d
    for d in np.sort(d_grid):
        vals = loss(f_grid, d)
        k = int(np.argmin(vals))
        f, best = float(f_grid[k]), float(vals[k])
        if step > 0:
            lo, hi = max(f_grid[0], f - step), min(f_grid[-1], f + step)
            res = optimize.minimize_scalar(lambda x: loss(x, d), bounds=(lo, hi),
                                           method="bounded", options={"xatol": 1e-12})
            if res.success and res.fun <= best:
                f, best = float(res.x), float(res.fun)
        profile.append((best, float(d), f))
    best_loss = min(item[0] for item in profile)
    _, d_best, f_best = next(item for item in profile if item[0] <= best_loss + 1e-10)

    params = _replace(base, entanglement_fidelity=f_best, readout_depolarization=d_best)
    p = params.werner_weight
    predicted = {
        "set1_mean": float(_bilinear(set1, p, d_best)),
        "verification": float(_bilinear(verif, p, d_best)),
        "overall_mean": float(_bilinear(overall, p, d_best)),
    }
    residuals = {
        "set1_mean": predicted["set1_mean"] - t_set1,
        "verification": predicted["verification"] - t_verif,
    }
    return CalibrationResult(
        params, {"set1_mean": t_set1, "verification": t_verif}, predicted, residuals, tolerance
    )


class NoiseCalibrator(BaseEstimator):
    """Estimator wrapper around :func:`calibrate`.

    ``fit`` takes the two targets (set-1 mean, verification fidelity).
    """

    def __init__(self, visibility: float = 0.96, fixed_depolarization=None,
                 tolerance: float = 0.02, convention: BasisConvention = DEFAULT_CONVENTION):
        self.visibility = visibility
        self.fixed_depolarization = fixed_depolarization
        self.tolerance = tolerance
        self.convention = convention

    def fit(self, X=(0.826, REFERENCE_VERIFICATION), y=None):
        X = np.asarray(X, dtype=float).ravel()
        if X.shape != (2,):
            raise ValueError(f"expected two targets, got {X.shape[0]}")
        self.result_ = calibrate(
            X, self.visibility, self.fixed_depolarization,
            tolerance=self.tolerance, convention=self.convention,
        )
        self.params_ = self.result_.params
        self.residuals_ = self.result_.residuals
        self.adequate_ = self.result_.adequate
        return self

    def transform(self, X=None) -> NoiseParams:
        check_is_fitted(self, "params_")
        return self.params_
