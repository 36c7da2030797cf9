"""Command-line entry point: ``quadkf {scalar,cw,validate}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import DEFAULTS, ScenarioConfig, config_from_dict, default_output_root, load_config
from .filters import GaussianBelief, UtParams, estimate_means
from .harness import McReport, ScalarStudy, monte_carlo, scalar_study

log = logging.getLogger("quadkf")

LOW_SAMPLE_THRESHOLD = 10_000
_FMT = "{:.12g}"


def _resolve(args, scenario: str) -> ScenarioConfig:
    cfg = load_config(args.config, scenario) if args.config else DEFAULTS[scenario]()
    if cfg.scenario != scenario:
        raise ValueError(f"config describes scenario {cfg.scenario!r}, command expects {scenario!r}")
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "nmc", None) is not None:
        changes["runs"] = args.nmc
    if getattr(args, "samples", None) is not None:
        changes["samples"] = args.samples
    if getattr(args, "workers", None) is not None:
        changes["workers"] = args.workers
    if getattr(args, "filters", None):
        changes["filters"] = [f.strip() for f in args.filters.split(",") if f.strip()]
    ut = cfg.ut
    if any(getattr(args, k, None) is not None for k in ("alpha", "beta", "kappa")):
        ut = UtParams(args.alpha if args.alpha is not None else ut.alpha,
                      args.beta if args.beta is not None else ut.beta,
                      args.kappa if args.kappa is not None else ut.kappa)
        changes["ut"] = ut
    return replace(cfg, **changes)


def _out_dir(args, cfg: ScenarioConfig) -> Path:
    if args.out:
        path = Path(args.out)
    elif cfg.output_dir:
        path = Path(cfg.output_dir)
    else:
        path = default_output_root() / f"{cfg.scenario}-seed{cfg.seed}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _FMT.format(v) for v in row])


def _write_json(path: Path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- scalar ----------------------------------------------------------------------

def write_scalar_bundle(out: Path, cfg: ScenarioConfig, study: ScalarStudy) -> dict:
    _write_json(out / "config.json", cfg.to_json_dict())
    _write_csv(out / "scatter.csv", ["x", "y_rad"], zip(study.x, study.y))

    grid = np.linspace(np.quantile(study.y, 0.001), np.quantile(study.y, 0.999), 201)
    prior = GaussianBelief(cfg.initial_mean, cfg.initial_cov)
    cols = [estimate_means(prior, study.gains[f], study.moments[f], grid[:, None])[:, 0] for f in cfg.filters]
    cols += [study.fits["lmmse"](grid), study.fits["qmmse"](grid)]
    _write_csv(out / "estimators.csv",
               ["y_rad"] + [f"{f}_x" for f in cfg.filters] + ["sample_lmmse_x", "sample_qmmse_x"],
               zip(grid, *cols))
    _write_csv(out / "conditional_mean.csv", ["y_rad", "mmse_x"], zip(study.curve.y_mid, study.curve.x_mean))
    _write_csv(out / "rmse.csv", ["estimator", "rmse_x"], [(k, v) for k, v in study.rmse.items()])

    r = study.rmse
    checks = {}
    if "qekf" in r and "ekf" in r:
        checks["qekf_equals_ekf"] = bool(abs(r["qekf"] - r["ekf"]) <= 1e-10 * r["ekf"])
    if "ukf" in r and "ekf" in r:
        checks["ukf_beats_ekf"] = bool(r["ukf"] < r["ekf"])
    if "qukf" in r and "ukf" in r:
        checks["qukf_15pct_better_than_ukf"] = bool(r["qukf"] <= 0.85 * r["ukf"])
    if "qukf" in r:
        checks["qukf_not_below_sample_qmmse"] = bool(r["qukf"] >= r["qmmse"] - 1e-3)
    warnings = []
    if len(study.x) < LOW_SAMPLE_THRESHOLD:
        warnings.append(f"low sample count ({len(study.x)} < {LOW_SAMPLE_THRESHOLD}); RMSE values are noisy")
    summary = {
        "scenario": "scalar",
        "seed": cfg.seed,
        "samples": len(study.x),
        "rmse": r,
        "gains": {f: {"B": study.gains[f].linear_part.ravel().tolist(),
                      "C": study.gains[f].quadratic_part.ravel().tolist()} for f in cfg.filters},
        "checks": checks,
        "warnings": warnings,
    }
    _write_json(out / "summary.json", summary)
    return summary


def cmd_scalar(args) -> int:
    cfg = _resolve(args, "scalar")
    problems = cfg.validate()
    if problems:
        raise ValueError("; ".join(problems))
    out = _out_dir(args, cfg)
    study = scalar_study(cfg)
    summary = write_scalar_bundle(out, cfg, study)
    for k, v in summary["rmse"].items():
        print(f"{k:>6s}  RMSE = {v:.6g}")
    for w in summary["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    print(f"outputs written to {out}")
    return 0


# --- cw --------------------------------------------------------------------------

_UNITS = {"pos": "km", "vel": "kms"}
_COMPONENTS = ["x_km", "y_km", "z_km", "vx_kms", "vy_kms", "vz_kms"]


def write_cw_bundle(out: Path, cfg: ScenarioConfig, rep: McReport) -> dict:
    _write_json(out / "config.json", cfg.to_json_dict())
    dyn = cfg.dynamics()
    nominal = np.asarray(cfg.initial_mean, dtype=float)
    nominal_rows = []
    for i, t in enumerate(rep.times):
        nominal = dyn.propagate(nominal, cfg.dt)
        nominal_rows.append([t, *nominal, *rep.truths[0, i]])
    _write_csv(out / "trajectory.csv",
               ["time_s"] + [f"nominal_{c}" for c in _COMPONENTS] + [f"run0_{c}" for c in _COMPONENTS],
               nominal_rows)

    header = ["time_s"]
    cols = []
    for f in rep.filters:
        for g in rep.groups:
            u = _UNITS[g]
            header += [f"{f}_est_sigma_{g}_{u}", f"{f}_eff_sigma_{g}_{u}"]
            cols += [rep.est_sigma[f][g], rep.eff_sigma[f][g]]
    _write_csv(out / "sigma.csv", header, zip(rep.times, *cols))

    header = ["time_s"] + [f"{f}_contain3s_{c}" for f in rep.filters for c in _COMPONENTS]
    _write_csv(out / "containment.csv", header,
               zip(rep.times, *[rep.containment[f][:, j] for f in rep.filters for j in range(6)]))

    header = ["run", "time_s"] + [f"{f}_err_{c}" for f in rep.filters for c in _COMPONENTS] \
        + [f"{f}_est_sigma_{c}" for f in rep.filters for c in _COMPONENTS]
    rows = []
    for r in range(rep.runs):
        for i, t in enumerate(rep.times):
            rows.append([str(r), t]
                        + [rep.errors[f][r, i, j] for f in rep.filters for j in range(6)]
                        + [np.sqrt(max(rep.variances[f][r, i, j], 0.0)) for f in rep.filters for j in range(6)])
    _write_csv(out / "errors.csv", header, rows)

    summary = {
        "scenario": "cw",
        "seed": cfg.seed,
        "runs": rep.runs,
        "epochs": len(rep.times),
        "rmse": rep.rmse,
        "final_sigma": {f: {g: {"estimated": float(rep.est_sigma[f][g][-1]),
                                "effective": float(rep.eff_sigma[f][g][-1])} for g in rep.groups}
                        for f in rep.filters},
        "checks": cw_checks(rep),
    }
    _write_json(out / "summary.json", summary)
    return summary


def cw_checks(rep: McReport) -> dict:
    """Consistency (last hour) and quadratic-vs-linear ranking at the final epoch."""
    last = rep.final_window(1 / 3)
    checks = {}
    for f in rep.filters:
        ratio = rep.eff_sigma[f]["pos"][-1] / rep.est_sigma[f]["pos"][-1]
        checks[f"{f}_containment_ge_0.95"] = bool(np.all(rep.containment[f][last].mean(axis=0) >= 0.95))
        checks[f"{f}_sigma_ratio_in_0.7_1.4"] = bool(0.7 <= ratio <= 1.4)
    quad = [f for f in ("qekf", "qukf") if f in rep.filters]
    lin = [f for f in ("ekf", "ukf") if f in rep.filters]
    if quad and lin:
        checks["quadratic_below_linear"] = bool(all(
            rep.eff_sigma[q][g][-1] < rep.eff_sigma[lf][g][-1]
            for q in quad for lf in lin for g in rep.groups))
    return checks


def cmd_cw(args) -> int:
    cfg = _resolve(args, "cw")
    problems = cfg.validate()
    if problems:
        raise ValueError("; ".join(problems))
    out = _out_dir(args, cfg)
    rep = monte_carlo(cfg)
    summary = write_cw_bundle(out, cfg, rep)
    for f, s in summary["final_sigma"].items():
        parts = ", ".join(f"{g} est {v['estimated']:.4g} eff {v['effective']:.4g}" for g, v in s.items())
        print(f"{f:>5s}: {parts}")
    print(f"outputs written to {out}")
    return 0


def cmd_validate(args) -> int:
    if args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
        cfg = config_from_dict(raw)
    else:
        cfg = DEFAULTS[args.scenario]()
    print(json.dumps(cfg.to_json_dict(), indent=2, sort_keys=True))
    problems = cfg.validate()
    for p in problems:
        print(f"error: {p}", file=sys.stderr)
    if not problems:
        print("config is valid")
    return 1 if problems else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadkf", description="Quadratic-update Kalman filter experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON scenario config (defaults to the built-in scenario)")
        sp.add_argument("--out", help="run directory (default: $QUADKF_OUT/<scenario>-seed<seed>)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--filters", help="comma-separated subset of ekf,ukf,qekf,qukf")
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--beta", type=float)
        sp.add_argument("--kappa", type=float)

    sp = sub.add_parser("scalar", help="one-shot arctan study")
    common(sp)
    sp.add_argument("--samples", type=int)
    sp.set_defaults(func=cmd_scalar)

    sp = sub.add_parser("cw", help="Clohessy-Wiltshire Monte Carlo campaign")
    common(sp)
    sp.add_argument("--nmc", type=int, help="Monte Carlo runs")
    sp.add_argument("--workers", type=int, help="worker processes")
    sp.set_defaults(func=cmd_cw)

    sp = sub.add_parser("validate", help="check a config without running it")
    sp.add_argument("--config")
    sp.add_argument("--scenario", choices=sorted(DEFAULTS), default="cw")
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
