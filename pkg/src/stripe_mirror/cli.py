"""Batch command-line front-end.

Thin shell over the library: every emitted number equals the output of the
corresponding library call bit-exactly.  Commands: coeffs, field-map, drop,
ensemble, analyze, sweep, validate.

Exit codes: 0 success, 2 config error, 3 analysis-window error,
4 integration failure.
"""
from __future__ import annotations

import argparse
import copy
import math
import os
import sys

import numpy as np

from . import analysis as ana
from . import config as cfg_mod
from . import dynamics as dyn
from . import ensemble as ens
from . import validate as validate_mod
from .constants import CONSTANTS
from .errors import (ConfigError, DomainError, IntegrationError,
                     PenetrationError, StripeMirrorError, ValidationError,
                     WindowError)
from .field import (exact_field_arrays, expansion_field_vector,
                    field_full_expansion, field_two_term,
                    harmonic_coefficients)

THREADS_ENV = "STRIPE_MIRROR_THREADS"


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def _write_csv(path: str, header: str, columns, int_cols=()) -> None:
    rows = len(columns[0])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for i in range(rows):
            cells = []
            for j, col in enumerate(columns):
                v = col[i]
                cells.append(str(v) if j in int_cols else
                             (v if isinstance(v, str) else _fmt(v)))
            fh.write(",".join(cells) + "\n")


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    return 1


def _load(args) -> cfg_mod.RunConfig:
    cfg = cfg_mod.RunConfig()
    if args.config:
        cfg = cfg_mod.load_config(args.config, base=cfg)
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.threads = _resolve_threads(args)
    if args.out:
        cfg.out = args.out
    os.makedirs(cfg.out, exist_ok=True)
    return cfg


def cmd_coeffs(args) -> int:
    cfg = _load(args)
    spec = cfg_mod.mirror_spec(cfg)
    sp = cfg_mod.species(cfg)
    co = harmonic_coefficients(spec)
    print(f"M0_A_per_m = {_fmt(spec.magnetization_M0)}")
    print(f"k_per_m = {_fmt(co.k)}")
    print(f"B1_T = {_fmt(co.B1)}")
    print(f"B1_G = {_fmt(co.B1 * 1e4)}")
    print(f"B3_T = {_fmt(co.B3)}")
    print(f"B3_G = {_fmt(co.B3 * 1e4)}")
    print(f"duty_factor_B1 = {_fmt(co.duty_b1)}")
    print(f"duty_factor_B3 = {_fmt(co.duty_b3)}")
    h_max = dyn.max_reflect_height(sp, co.B1)
    print(f"h_max_m = {_fmt(h_max)}")
    try:
        y_t = dyn.turning_point(sp, co.B1, co.k, cfg.drop)
        print(f"y_turn_m = {_fmt(y_t)}")
        print(f"harmonic_ratio_at_turning = {_fmt(dyn.harmonic_ratio_at_turning(spec, sp, cfg.drop))}")
        print("penetrates = false")
    except PenetrationError as exc:
        print("penetrates = true")
        print(f"required_B1_T = {_fmt(exc.required_b1)}")
    return 0


def cmd_field_map(args) -> int:
    cfg = _load(args)
    spec = cfg_mod.mirror_spec(cfg)
    xs = np.linspace(cfg.x_min, cfg.x_max, cfg.nx)
    ys = np.linspace(cfg.y_min, cfg.y_max, cfg.ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    gx, gy = gx.ravel(), gy.ravel()
    if cfg.model == "exact-stripes":
        if math.isinf(spec.n_stripes):
            raise ConfigError("exact-stripes field map needs a finite odd n_stripes")
        bx, by = exact_field_arrays(spec, gx, gy)
        bmag = np.sqrt(bx ** 2 + by ** 2 + spec.bias_field_Bz ** 2)
    else:
        bx, by = expansion_field_vector(spec, gx, gy)
        if cfg.model == "full-expansion":
            bmag = field_full_expansion(spec, gx, gy)
        else:
            bmag = field_two_term(spec, gx, gy)
    bz = np.full_like(bx, spec.bias_field_Bz)
    path = os.path.join(cfg.out, "field_map.csv")
    _write_csv(path, "x_m,y_m,Bx_T,By_T,Bz_T,Bmag_T", [gx, gy, bx, by, bz, bmag])
    print(f"wrote {path} ({gx.size} points)")
    return 0


def cmd_drop(args) -> int:
    cfg = _load(args)
    sp = cfg_mod.species(cfg)
    model = cfg_mod.potential_model(cfg)
    s0 = dyn.State(x=0.0, y=cfg.drop, vx=0.0, vy=0.0, t=0.0)
    traj = dyn.propagate(sp, model, s0, t_end=cfg.t_end, tol=cfg.tol)
    arr = traj.states_array()
    ke = 0.5 * sp.mass * (arr[:, 3] ** 2 + arr[:, 4] ** 2)
    u = dyn.magnetic_energy(sp, model, arr[:, 1], np.maximum(arr[:, 2], 1e-300))
    e = ke + u + sp.mass * CONSTANTS.g_grav * arr[:, 2]
    path = os.path.join(cfg.out, "trajectory.csv")
    _write_csv(path, "t_s,x_m,y_m,vx_ms,vy_ms,E_J",
               [arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], e])
    bounces = dyn.find_bounces(traj, epsilon=cfg.epsilon)
    print(f"trajectory_csv = {path}")
    print(f"penetrated = {'true' if traj.penetrated else 'false'}")
    print(f"status = {traj.status}")
    print(f"n_bounces = {sum(1 for b in bounces if not b.penetrated)}")
    print(f"epsilon = {_fmt(cfg.epsilon)}")
    for i, b in enumerate(bounces):
        tag = "penetration" if b.penetrated else f"bounce_{i + 1}"
        print(f"{tag}_t_s = {_fmt(b.t_turn)}")
        print(f"{tag}_y_m = {_fmt(b.y_turn)}")
        print(f"{tag}_x_m = {_fmt(b.x_at_turn)}")
        print(f"{tag}_interaction_s = {_fmt(b.interaction_time)}")
    print(f"energy_drift_rel = {_fmt(traj.energy_drift())}")
    return 0


def cmd_ensemble(args) -> int:
    cfg = _load(args)
    sp = cfg_mod.species(cfg)
    model = cfg_mod.potential_model(cfg)
    espec = cfg_mod.ensemble_spec(cfg)
    series = ens.run_ensemble(espec, sp, model, tol=cfg.tol, threads=cfg.threads,
                              kick_factor=cfg.kick)
    path = os.path.join(cfg.out, "ensemble.csv")
    _write_csv(path, "t_s,mean_y_m,rms_x_m,rms_y_m,mean_vx_ms,rms_vx_ms,n_survivors",
               [series.t, series.mean_y, series.rms_x, series.rms_y,
                series.mean_vx, series.rms_vx, series.n_survivors], int_cols=(6,))
    bpath = os.path.join(cfg.out, "bounces.csv")
    recs = series.bounce_records
    _write_csv(bpath, "atom_index,t_turn_s,y_turn_m,x_at_turn_m,penetrated",
               [[r[0] for r in recs], [r[1] for r in recs], [r[2] for r in recs],
                [r[3] for r in recs], [int(r[4]) for r in recs]], int_cols=(0, 4))
    print(f"ensemble_csv = {path}")
    print(f"bounces_csv = {bpath}")
    print(f"n_atoms = {series.n_atoms}")
    print(f"final_survivors = {int(series.n_survivors[-1])}")
    return 0


def _load_series(path: str) -> ens.CloudTimeSeries:
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    try:
        return ens.CloudTimeSeries(
            t=np.asarray(data["t_s"], dtype=float),
            mean_y=np.asarray(data["mean_y_m"], dtype=float),
            rms_x=np.asarray(data["rms_x_m"], dtype=float),
            rms_y=np.asarray(data["rms_y_m"], dtype=float),
            mean_vx=np.asarray(data["mean_vx_ms"], dtype=float),
            rms_vx=np.asarray(data["rms_vx_ms"], dtype=float),
            n_survivors=np.asarray(data["n_survivors"], dtype=np.int64),
            n_atoms=int(np.max(data["n_survivors"])))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path} is not an ensemble CSV: {exc}") from exc


def cmd_analyze(args) -> int:
    cfg = _load(args)
    series = _load_series(args.series)
    fit = ana.fit_expansion(series, window=cfg.fit_window)
    post = cfg_mod.default_post_window(cfg)
    report = ana.specularity_test(series, fit, post,
                                  threshold_sigma=cfg.threshold_sigma)
    labels = ana.residual_windows(series, fit, post)
    rpath = os.path.join(cfg.out, "residuals.csv")
    _write_csv(rpath, "t_s,residual_m,window",
               [[t for t, _ in fit.residuals], [r for _, r in fit.residuals], labels])
    print(f"residuals_csv = {rpath}")
    print(f"fit_window_s = {_fmt(fit.fit_window[0])}:{_fmt(fit.fit_window[1])}")
    print(f"post_window_s = {_fmt(post[0])}:{_fmt(post[1])}")
    print(f"slope_m_per_s = {_fmt(fit.slope)}")
    print(f"intercept_m = {_fmt(fit.intercept)}")
    print(f"fit_residual_rms_m = {_fmt(fit.residual_rms)}")
    print(f"post_residual_mean_m = {_fmt(report.post_residual_mean)}")
    print(f"post_residual_rms_m = {_fmt(report.post_residual_rms)}")
    print(f"standard_error_m = {_fmt(report.standard_error)}")
    print(f"statistic_sigma = {_fmt(report.statistic)}")
    print(f"threshold_sigma = {_fmt(report.threshold_sigma)}")
    print(f"verdict = {report.verdict}")
    try:
        dev = ana.mean_height_deviation(series, cfg.drop, guard=cfg.guard)
        print(f"mean_height_max_dev_m = {_fmt(dev)}")
    except WindowError:
        pass
    return 0


_SWEEPABLE = ("a", "c", "b", "B1", "M0", "bias", "drop", "temperature")


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if args.param not in _SWEEPABLE:
        raise ConfigError(f"--param must be one of {_SWEEPABLE}, got {args.param!r}")
    rows = []
    for value_text in args.values.split(","):
        sub = cfg_mod.parse_config_text(f"{args.param} = {value_text.strip()}",
                                        base=copy.deepcopy(cfg))
        spec = cfg_mod.mirror_spec(sub)
        sp = cfg_mod.species(sub)
        co = harmonic_coefficients(spec)
        h_max = dyn.max_reflect_height(sp, co.B1)
        model = cfg_mod.potential_model(sub)
        y_t = math.nan
        ratio = math.nan
        t_int = math.nan
        survived = 0
        try:
            y_t = dyn.turning_point(sp, co.B1, co.k, sub.drop)
            ratio = dyn.harmonic_ratio_at_turning(spec, sp, sub.drop)
        except PenetrationError:
            pass
        t1 = math.sqrt(2.0 * sub.drop / CONSTANTS.g_grav)
        traj = dyn.propagate(sp, model, dyn.State(0.0, sub.drop, 0.0, 0.0, 0.0),
                             t_end=2.2 * t1, tol=sub.tol)
        if traj.bounce_times and not traj.penetrated:
            survived = 1
            t_int = dyn.interaction_time(traj, epsilon=sub.epsilon)
        rows.append((value_text.strip(), co.B1, co.B3, co.duty_b1, co.duty_b3,
                     h_max, y_t, t_int, ratio, survived))
    print("value,B1_T,B3_T,duty_b1,duty_b3,h_max_m,y_turn_m,interaction_s,"
          "corrugation_ratio,survived")
    for r in rows:
        print(",".join([r[0]] + [_fmt(v) for v in r[1:9]] + [str(r[9])]))
    return 0


def cmd_validate(args) -> int:
    results = validate_mod.run_checks()
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name.ljust(width)}  {r.detail}")
    n_fail = sum(1 for r in results if not r.passed)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return 0 if n_fail == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stripe-mirror",
        description="Stripe-array atom-mirror simulator: fields, bounces, "
                    "Monte Carlo clouds, specularity analysis.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a key = value config file")
    common.add_argument("--seed", type=int, help="override the ensemble seed")
    common.add_argument("--threads", type=int,
                        help=f"worker processes (fallback: ${THREADS_ENV}, then 1)")
    common.add_argument("--out", help="output directory (default: current)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("coeffs", parents=[common],
                   help="harmonic coefficients, max drop height, turning point")
    sub.add_parser("field-map", parents=[common],
                   help="CSV field map on the configured grid")
    sub.add_parser("drop", parents=[common],
                   help="single-atom drop: trajectory CSV and bounce report")
    sub.add_parser("ensemble", parents=[common],
                   help="Monte Carlo cloud run: time-series CSV")
    pa = sub.add_parser("analyze", parents=[common],
                        help="specularity analysis of an ensemble CSV")
    pa.add_argument("series", help="path to an ensemble CSV")
    ps = sub.add_parser("sweep", parents=[common],
                        help="scalar outputs across a parameter sweep")
    ps.add_argument("--param", required=True, help=f"one of {_SWEEPABLE}")
    ps.add_argument("--values", required=True,
                    help="comma-separated values with units, e.g. '1 um,2 um'")
    sub.add_parser("validate", parents=[common],
                   help="run the oracle/invariant check suite")
    return parser


_COMMANDS = {
    "coeffs": cmd_coeffs,
    "field-map": cmd_field_map,
    "drop": cmd_drop,
    "ensemble": cmd_ensemble,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except WindowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ConfigError, ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StripeMirrorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
