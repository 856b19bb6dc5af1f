"""Run configuration and CSV/JSON output formats.

CSV files start with ``#``-prefixed provenance lines (schema version, seed,
noise parameters, basis convention) followed by a header row.  Numbers are
written with 6 significant digits.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from .experiment import SweepSummary, angle_range, table1_sets
from .noise import NoiseParams
from .protocol import BasisConvention, PhaseSetting, outcome_map
from .tomography import BASES, CountRecord

SCHEMA_VERSION = "1.0"

SWEEP_COLUMNS = (
    "set_id", "alpha_deg", "phi_deg", "detector_id", "outcome", "basis",
    "n_up", "n_total", "p_hat", "p_err", "fidelity", "fidelity_err",
)
CURVE_COLUMNS = ("phi_deg", "outcome", "basis", "probability")


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, str)):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return f"{float(x):.6g}"


def parse_angles(spec) -> list[float]:
    """A number, a list of numbers, or ``start:stop:step`` (inclusive)."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return [float(spec)]
    if isinstance(spec, list):
        return [float(v) for v in spec]
    if isinstance(spec, str):
        parts = spec.split(":")
        try:
            if len(parts) == 1:
                return [float(parts[0])]
            if len(parts) == 3:
                return angle_range(*(float(p) for p in parts))
        except ValueError as exc:
            raise ConfigError(f"bad angle specification {spec!r}: {exc}") from None
    raise ConfigError(f"bad angle specification {spec!r}")


@dataclass
class SetConfig:
    set_id: int
    alpha: list
    phi: list

    @property
    def points(self) -> list[PhaseSetting]:
        return [PhaseSetting(a, p) for a in self.alpha for p in self.phi]


def _default_sets() -> list[SetConfig]:
    out = []
    for set_id, pts in table1_sets().items():
        alphas = sorted({p.alpha for p in pts})
        phis = sorted({p.phi for p in pts})
        out.append(SetConfig(set_id, alphas, phis))
    return out


@dataclass
class RunConfig:
    schema_version: str = SCHEMA_VERSION
    seed: int = 0
    events: int = 300
    bootstrap_B: int = 1000
    n_jobs: int = 1
    convention: BasisConvention = field(default_factory=BasisConvention)
    noise: NoiseParams = field(default_factory=NoiseParams)
    sets: list = field(default_factory=_default_sets)
    calibration: dict = field(default_factory=lambda: {
        "targets": [0.826, 0.87], "visibility": 0.96,
        "fixed_depolarization": None, "tolerance": 0.02,
    })

    KEYS = ("schema_version", "seed", "events", "bootstrap_B", "n_jobs", "convention",
            "noise", "sets", "calibration")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(data) - set(cls.KEYS)
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {sorted(unknown)}")
        cfg = cls()
        version = data.get("schema_version", SCHEMA_VERSION)
        if str(version).split(".")[0] != SCHEMA_VERSION.split(".")[0]:
            raise ConfigError(f"unsupported schema_version {version!r}")
        cfg.schema_version = str(version)
        for key in ("seed", "events", "bootstrap_B", "n_jobs"):
            if key in data:
                v = data[key]
                if isinstance(v, bool) or not isinstance(v, int):
                    raise ConfigError(f"{key} must be an integer")
                setattr(cfg, key, v)
        if cfg.seed < 0 or cfg.events < 1 or cfg.bootstrap_B < 100:
            raise ConfigError("need seed >= 0, events >= 1, bootstrap_B >= 100")
        try:
            if "convention" in data:
                conv = data["convention"]
                sign = conv.get("sign") if isinstance(conv, dict) else conv
                if isinstance(conv, dict) and set(conv) - {"sign", "description"}:
                    raise ConfigError("unknown key in convention")
                cfg.convention = BasisConvention(int(sign))
            if "noise" in data:
                cfg.noise = NoiseParams.from_dict(data["noise"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if "sets" in data:
            cfg.sets = []
            for i, item in enumerate(data["sets"]):
                if not isinstance(item, dict) or set(item) - {"set_id", "alpha", "phi"}:
                    raise ConfigError(f"set entry {i} must have only set_id, alpha, phi")
                if "alpha" not in item or "phi" not in item:
                    raise ConfigError(f"set entry {i} needs alpha and phi")
                cfg.sets.append(SetConfig(int(item.get("set_id", i + 1)),
                                          parse_angles(item["alpha"]), parse_angles(item["phi"])))
            if not cfg.sets:
                raise ConfigError("sets must not be empty")
            ids = [s.set_id for s in cfg.sets]
            if len(set(ids)) != len(ids) or min(ids) < 0:
                raise ConfigError("set_id values must be unique and non-negative")
        if "calibration" in data:
            cal = data["calibration"]
            allowed = {"targets", "visibility", "fixed_depolarization", "tolerance"}
            if not isinstance(cal, dict) or set(cal) - allowed:
                raise ConfigError(f"calibration accepts only {sorted(allowed)}")
            cfg.calibration = {**cfg.calibration, **cal}
            if len(cfg.calibration["targets"]) != 2:
                raise ConfigError("calibration.targets needs two values")
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from None
        return cls.from_dict(data)


def provenance(seed, noise: NoiseParams | None, convention: BasisConvention) -> dict:
    omap = outcome_map(convention)
    return {
        "schema_version": SCHEMA_VERSION,
        "master_seed": seed,
        "noise": noise.to_dict() if noise is not None else None,
        "convention": convention.to_dict(),
        "outcome_map": {o.label: f"Phi{k}" for o, k in sorted(omap.items(), key=lambda kv: kv[0].value)},
        "detectors": {f"APD{o.detector_id}": o.label for o in omap},
    }


def _comment_lines(meta: dict) -> str:
    return "".join(f"# {k}: {json.dumps(v, sort_keys=True)}\n" for k, v in meta.items())


def write_csv(path, columns, rows, meta: dict) -> None:
    buf = io.StringIO()
    buf.write(_comment_lines(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_csv(path) -> tuple[dict, list[dict]]:
    """Return (provenance, rows) of a CSV written by :func:`write_csv`."""
    meta, body = {}, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            try:
                meta[key] = json.loads(value)
            except json.JSONDecodeError:
                meta[key] = value
        elif line.strip():
            body.append(line)
    return meta, list(csv.DictReader(body))


def curve_rows(rows) -> list[dict]:
    return [{**r, "outcome": r["outcome"].label} for r in rows]


def sweep_rows(summary: SweepSummary) -> list[dict]:
    rows = []
    for point in summary.per_point:
        for res in point.per_outcome:
            tomo = res.tomography
            for rec in tomo.records:
                rows.append({
                    "set_id": summary.set_id,
                    "alpha_deg": point.setting.alpha,
                    "phi_deg": point.setting.phi,
                    "detector_id": res.outcome.detector_id,
                    "outcome": res.outcome.label,
                    "basis": rec.basis.value,
                    "n_up": rec.n_up,
                    "n_total": rec.n_total,
                    "p_hat": rec.rate,
                    "p_err": rec.rate_err,
                    "fidelity": tomo.fidelity,
                    "fidelity_err": tomo.fidelity_err,
                })
    return rows


def summary_entry(summary: SweepSummary) -> dict:
    return {
        "set_id": summary.set_id,
        "points": len(summary.per_point),
        "mean_fidelity": summary.mean_fidelity,
        "mean_fidelity_err": summary.mean_fidelity_err,
    }


GROUP_COLUMNS = ("set_id", "alpha_deg", "phi_deg", "detector_id", "outcome")


def records_from_rows(rows) -> list[tuple[dict, list[CountRecord]]]:
    """Group CountRecord rows (basis, n_up, n_total) by any identifying columns."""
    groups: dict[tuple, list] = {}
    keys: dict[tuple, dict] = {}
    for i, row in enumerate(rows):
        try:
            rec = CountRecord(row["basis"].strip().lower(), int(row["n_up"]), int(row["n_total"]))
        except (KeyError, ValueError, AttributeError) as exc:
            raise ConfigError(f"bad count row {i + 1}: {exc}") from None
        ident = {c: row[c] for c in GROUP_COLUMNS if c in row}
        k = tuple(ident.items())
        groups.setdefault(k, []).append(rec)
        keys[k] = ident
    out = []
    for k, recs in groups.items():
        if sorted(r.basis.value for r in recs) != sorted(b.value for b in BASES):
            raise ConfigError(f"group {keys[k] or '(all rows)'} needs exactly one x, y, z row")
        out.append((keys[k], recs))
    return out
