"""Command-line front end: ``atomrsp {curves,sweep,table1,calibrate,tomo}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiment, files, protocol, qcore, tomography
from .experiment import SweepSpec
from .files import ConfigError, RunConfig

log = logging.getLogger("atomrsp")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CALIBRATION = 3


class UsageError(Exception):
    pass


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise UsageError("--seed must be non-negative")
        cfg.seed = args.seed
    if getattr(args, "events", None) is not None:
        if args.events < 1:
            raise UsageError("--events must be positive")
        cfg.events = args.events
    if getattr(args, "jobs", None) is not None:
        cfg.n_jobs = args.jobs
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_curves(args) -> int:
    try:
        alphas = files.parse_angles(args.alpha)
        phis = files.parse_angles(args.phi)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    if len(alphas) != 1:
        raise UsageError("--alpha takes a single angle")
    conv = protocol.BasisConvention(args.convention)
    rows = experiment.analytic_curves(alphas[0], phis, conv)
    meta = files.provenance(None, None, conv)
    meta["alpha_deg"] = alphas[0]
    meta["columns_note"] = "basis z: p(up_z), x: p(down_x), y: p(up_y); uncorrected ideal states"
    path = _out_dir(args) / "curves.csv"
    files.write_csv(path, files.CURVE_COLUMNS, files.curve_rows(rows), meta)
    log.info("wrote %s (%d rows)", path, len(rows))
    return EXIT_OK


def _run_sets(cfg: RunConfig):
    return [
        experiment.run_sweep(
            SweepSpec(s.points, cfg.events, cfg.noise, cfg.seed, cfg.bootstrap_B,
                      s.set_id, cfg.convention),
            cfg.n_jobs,
        )
        for s in cfg.sets
    ]


def _write_sweep(out: Path, cfg: RunConfig, summaries, extra=None) -> dict:
    meta = files.provenance(cfg.seed, cfg.noise, cfg.convention)
    meta.update(events_per_point_per_basis=cfg.events, bootstrap_B=cfg.bootstrap_B)
    rows = [r for s in summaries for r in files.sweep_rows(s)]
    files.write_csv(out / "sweep.csv", files.SWEEP_COLUMNS, rows, meta)
    report = {**meta, "sets": [files.summary_entry(s) for s in summaries]}
    if extra:
        report.update(extra)
    return report


def cmd_sweep(args) -> int:
    cfg = _config(args)
    out = _out_dir(args)
    summaries = _run_sets(cfg)
    report = _write_sweep(out, cfg, summaries)
    files.write_json(out / "summary.json", report)
    for s in summaries:
        print(f"set {s.set_id}: F = {s.mean_fidelity:.4f} +- {s.mean_fidelity_err:.4f}")
    return EXIT_OK


def cmd_table1(args) -> int:
    cfg = _config(args)
    out = _out_dir(args)
    res = experiment.run_table1(cfg.noise, cfg.seed, cfg.events, cfg.bootstrap_B,
                                cfg.n_jobs, cfg.convention)
    summaries = list(res.summaries.values())
    reference = {
        str(k): {"mean_fidelity": v[0], "mean_fidelity_err": v[1]}
        for k, v in experiment.REFERENCE_SETS.items()
    }
    report = _write_sweep(out, cfg, summaries, {
        "distinct_states": res.distinct_states,
        "overall_mean_fidelity": res.overall_mean,
        "overall_mean_fidelity_err": res.overall_mean_err,
        "verification_fidelity": experiment.verification_fidelity(cfg.noise, cfg.convention),
        "reference": reference,
    })
    files.write_json(out / "table1.json", report)
    print("set  simulated           reference")
    for s in summaries:
        ref = experiment.REFERENCE_SETS.get(s.set_id, (float("nan"), float("nan")))
        print(f"{s.set_id:>3}  {100 * s.mean_fidelity:5.1f}% +- {100 * s.mean_fidelity_err:.2f}%"
              f"   {100 * ref[0]:5.1f}% +- {100 * ref[1]:.2f}%")
    print(f"distinct states: {res.distinct_states}; overall mean {100 * res.overall_mean:.1f}%")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    out = _out_dir(args)
    cal = cfg.calibration
    try:
        result = experiment.calibrate(
            cal["targets"], float(cal["visibility"]), cal["fixed_depolarization"],
            base=cfg.noise, tolerance=float(cal["tolerance"]), convention=cfg.convention,
        )
    except ValueError as exc:
        files.write_json(out / "calibration.json", {
            **files.provenance(cfg.seed, cfg.noise, cfg.convention),
            "status": "failed", "error": str(exc),
        })
        log.error("calibration failed: %s", exc)
        return EXIT_CALIBRATION
    report = {
        **files.provenance(cfg.seed, result.params, cfg.convention),
        "status": "ok",
        "model_adequate": result.adequate,
        "tolerance": result.tolerance,
        "targets": result.targets,
        "predicted": result.predicted,
        "residuals": result.residuals,
        "budget": result.budget(),
    }
    files.write_json(out / "calibration.json", report)
    for k, r in result.residuals.items():
        print(f"{k}: target {result.targets[k]:.4f} predicted {result.predicted[k]:.4f} "
              f"residual {r:+.4f}")
    if not result.adequate:
        log.warning("residual above %.3g: the noise model cannot meet both targets",
                    result.tolerance)
    return EXIT_OK


def cmd_tomo(args) -> int:
    out = _out_dir(args)
    try:
        meta, rows = files.read_csv(args.input)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.input}: {exc}") from None
    groups = files.records_from_rows(rows)
    conv = protocol.BasisConvention(args.convention)
    out_rows = []
    for ident, recs in groups:
        rho = tomography.reconstruct(recs)
        r = qcore.bloch_of(rho)
        row = {c: ident.get(c, "") for c in files.GROUP_COLUMNS}
        row.update(bloch_x=r[0], bloch_y=r[1], bloch_z=r[2], fidelity="", fidelity_err="")
        alpha = ident.get("alpha_deg", args.alpha)
        phi = ident.get("phi_deg", args.phi)
        if alpha not in (None, "") and phi not in (None, ""):
            target = protocol.target_state(protocol.PhaseSetting(float(alpha), float(phi)))
            res = tomography.analyze(recs, target, args.bootstrap, args.seed)
            row.update(fidelity=res.fidelity, fidelity_err=res.fidelity_err)
        out_rows.append(row)
    columns = files.GROUP_COLUMNS + ("bloch_x", "bloch_y", "bloch_z", "fidelity", "fidelity_err")
    prov = files.provenance(args.seed, None, conv)
    prov["source"] = str(args.input)
    files.write_csv(out / "tomo.csv", columns, out_rows, prov)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atomrsp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        p.add_argument("--out", default=".", help="output directory")
        if config:
            p.add_argument("--config", help="JSON run configuration")
            p.add_argument("--seed", type=int)
            p.add_argument("--events", type=int, help="events per point per basis")
            p.add_argument("--jobs", type=int, help="worker threads")

    p = sub.add_parser("curves", help="analytic probability curves")
    p.add_argument("--alpha", default="90")
    p.add_argument("--phi", default="0:330:30")
    p.add_argument("--convention", type=int, choices=(1, -1), default=1)
    common(p, config=False)
    p.set_defaults(func=cmd_curves)

    for name, func, text in (
        ("sweep", cmd_sweep, "Monte Carlo sweep over configured sets"),
        ("table1", cmd_table1, "the four reference measurement sets"),
        ("calibrate", cmd_calibrate, "fit noise knobs to target fidelities"),
    ):
        p = sub.add_parser(name, help=text)
        common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("tomo", help="reconstruct states from a count CSV")
    p.add_argument("input")
    p.add_argument("--alpha", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--convention", type=int, choices=(1, -1), default=1)
    common(p, config=False)
    p.set_defaults(func=cmd_tomo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"atomrsp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ValueError) as exc:
        print(f"atomrsp: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
