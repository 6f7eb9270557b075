"""Command-line front end.

Subcommands: rates | simulate | sweep | fit | optimize | report. Global
flags (per subcommand): --config, --seed, --out, --threads. Exit codes:
0 success, 1 usage or configuration error, 2 runtime or data error.

Every randomized command is seeded (default 42): rerunning with the same
config produces byte-identical data files. The report subcommand is the
only one that renders figures; everything else writes delimited text and
JSON only.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config, updated
from .errors import ConfigError, IonreadError
from .estimation import curve_from_records, fit_decay_curve
from .experiment import error_vs_time_curve, optimize_tau_max
from .plotting import render_error_vs_time, render_model_summary
from .protocols import Mode, decide
from .rates import rates_for_operating_point
from .stream import State, simulate_ensemble, trial_seed
from . import tables


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's 2
        raise _UsageError(message)


def _tag(intensity: float) -> str:
    return f"{intensity:g}".replace(".", "p").replace("-", "m")


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML config file")
    common.add_argument("--seed", type=int, help="override the RNG seed")
    common.add_argument("--out", metavar="DIR", default=".",
                        help="output directory (default: current)")
    common.add_argument("--threads", type=int, help="worker processes")

    parser = _Parser(prog="ionread",
                     description="Fluorescence state-detection simulator "
                                 "and analyzer for hyperfine qubits.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)
    modes = [m.value for m in Mode]

    p = sub.add_parser("rates", parents=[common],
                       help="tabulate operating rates per intensity")
    p.add_argument("--intensity", type=float, action="append", metavar="MW_CM2",
                   help="operating intensity; repeatable (overrides config)")
    p.add_argument("--i-sat", type=float, dest="i_sat", metavar="MW_CM2",
                   help="override the saturation intensity")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("simulate", parents=[common],
                       help="sample detection trials and export event files")
    p.add_argument("--intensity", type=float, action="append", metavar="MW_CM2")
    p.add_argument("--n", type=int, metavar="N", help="trials per prepared state")
    p.add_argument("--horizon", type=float, metavar="SEC",
                   help="simulation window (default: protocol tau_max)")
    p.add_argument("--outcomes", action="store_true",
                   help="also apply the configured protocol per trial")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common],
                       help="error-vs-time curve over a tau_max grid")
    p.add_argument("--intensity", type=float, action="append", metavar="MW_CM2")
    p.add_argument("--mode", choices=modes, help="protocol mode")
    p.add_argument("--tau-max", type=float, dest="tau_max", metavar="SEC",
                   help="evaluate a single tau_max instead of the grid")
    p.add_argument("--n", type=int, metavar="N")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", parents=[common],
                       help="fit rates to a measured count curve")
    p.add_argument("--input", required=True, metavar="CSV",
                   help="curve file with header tau_s,mean_counts,n_trials")
    p.add_argument("--unweighted", action="store_true",
                   help="ignore per-point trial counts in the fit")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("optimize", parents=[common],
                       help="find the error-minimizing tau_max per intensity")
    p.add_argument("--intensity", type=float, action="append", metavar="MW_CM2")
    p.add_argument("--mode", choices=modes)
    p.add_argument("--n", type=int, metavar="N")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("report", parents=[common],
                       help="sweep all operating points and render figures")
    p.add_argument("--intensity", type=float, action="append", metavar="MW_CM2")
    p.add_argument("--mode", choices=modes)
    p.add_argument("--n", type=int, metavar="N")
    p.set_defaults(func=cmd_report)

    return parser


def _configure(args) -> RunConfig:
    cfg = load_config(args.config)
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if getattr(args, "intensity", None):
        overrides["intensities_mw_cm2"] = args.intensity
    if getattr(args, "i_sat", None) is not None:
        overrides.setdefault("model", {})["i_sat_mw_cm2"] = args.i_sat
    if getattr(args, "mode", None):
        overrides.setdefault("protocol", {})["mode"] = args.mode
    if getattr(args, "n", None) is not None:
        overrides.setdefault("simulate", {})["n_per_state"] = args.n
    if getattr(args, "horizon", None) is not None:
        overrides.setdefault("simulate", {})["horizon_s"] = args.horizon
    return updated(cfg, overrides) if overrides else cfg


def _rate_rows(cfg: RunConfig):
    rows = []
    for intensity in cfg.intensities:
        rates = rates_for_operating_point(cfg.model, intensity)
        rows.append((intensity, rates, cfg.resolved_tau_c(rates)))
    return rows


def cmd_rates(cfg: RunConfig, out: Path, args) -> int:
    rows = _rate_rows(cfg)
    tables.write_rates_csv(out / "rates.csv", rows, cfg.config_hash, cfg.seed)
    head = ("intensity", "s0", "r0/s", "eps*r0/s", "rd/s", "rb/s", "rdc/s", "tau_c_us")
    print(("{:>10} " * len(head)).format(*head).rstrip())
    for intensity, r, tau_c in rows:
        cells = (f"{intensity:g}", f"{r.s0:.4g}", f"{r.r0:.4g}",
                 f"{r.detected_signal:.4g}", f"{r.rd:.4g}", f"{r.rb:.4g}",
                 f"{r.rdc:.4g}", f"{tau_c * 1e6:.3f}")
        print(("{:>10} " * len(cells)).format(*cells).rstrip())
    print(f"wrote {out / 'rates.csv'}")
    return 0


def cmd_simulate(cfg: RunConfig, out: Path, args) -> int:
    horizon = cfg.horizon if cfg.horizon is not None else cfg.tau_max
    meta: dict = {"config_hash": cfg.config_hash, "seed": cfg.seed,
                  "horizon_s": horizon, "n_per_state": cfg.n_per_state,
                  "operating_points": {}}
    for intensity in cfg.intensities:
        rates = rates_for_operating_point(cfg.model, intensity)
        tag = _tag(intensity)
        bright = simulate_ensemble(State.BRIGHT, rates, horizon, cfg.n_per_state,
                                   trial_seed(cfg.seed, 0), cfg.options, cfg.threads)
        dark = simulate_ensemble(State.DARK, rates, horizon, cfg.n_per_state,
                                 trial_seed(cfg.seed, 1), cfg.options, cfg.threads)
        records = bright + dark
        tables.write_events_csv(out / f"events_{tag}.csv", records,
                                cfg.config_hash, cfg.seed)
        tables.write_trials_csv(out / f"trials_{tag}.csv", records,
                                cfg.config_hash, cfg.seed)
        grid = np.linspace(horizon / 20.0, horizon, 20)
        curve = curve_from_records(bright, grid)
        tables.write_curve_csv(out / f"curve_{tag}.csv", curve,
                               cfg.config_hash, cfg.seed)
        if args.outcomes:
            if horizon < cfg.tau_max:
                raise ConfigError("horizon_s is shorter than protocol tau_max_s; "
                                  "outcomes need horizon >= tau_max")
            params = cfg.protocol_params(rates)
            outcomes = [(i, decide(r, params)) for i, r in enumerate(records)]
            tables.write_outcomes_csv(out / f"outcomes_{tag}.csv", outcomes,
                                      cfg.config_hash, cfg.seed)
        n_events = sum(r.events.size for r in records)
        meta["operating_points"][f"{intensity:g}"] = {
            "rates": tables.rates_payload(rates), "total_events": n_events}
        print(f"intensity {intensity:g}: {len(records)} trials, "
              f"{n_events} events -> events_{tag}.csv")
    tables.write_json(out / "simulate_meta.json", meta)
    return 0


def cmd_sweep(cfg: RunConfig, out: Path, args) -> int:
    meta: dict = {"config_hash": cfg.config_hash, "seed": cfg.seed,
                  "mode": cfg.mode.value, "n_per_state": cfg.n_per_state,
                  "operating_points": {}}
    for intensity in cfg.intensities:
        rates = rates_for_operating_point(cfg.model, intensity)
        tau_c = cfg.resolved_tau_c(rates)
        if args.tau_max is not None:
            if args.tau_max <= 0.0:
                raise ConfigError("--tau-max must be positive")
            grid = np.array([args.tau_max])
        else:
            grid = cfg.sweep_grid(tau_c)
        sweep = error_vs_time_curve(rates, cfg.mode, tau_c, grid,
                                    cfg.n_per_state, cfg.seed,
                                    threshold=cfg.threshold, options=cfg.options,
                                    threads=cfg.threads, ci_level=cfg.ci_level,
                                    intensity=intensity)
        tag = _tag(intensity)
        tables.write_sweep_csv(out / f"sweep_{tag}.csv", sweep,
                               cfg.config_hash, cfg.seed)
        best = min(sweep.points, key=lambda p: p.error_mean)
        meta["operating_points"][f"{intensity:g}"] = {
            "tau_c_s": tau_c, "rates": tables.rates_payload(rates),
            "best_tau_max_s": best.tau_max, "best_error_mean": best.error_mean}
        print(f"intensity {intensity:g}: tau_c {tau_c * 1e6:.3f} us | best point "
              f"tau_max {best.tau_max * 1e6:.1f} us, error {best.error_mean:.3e}, "
              f"avg time {best.avg_time * 1e6:.1f} us -> sweep_{tag}.csv")
    tables.write_json(out / "sweep_meta.json", meta)
    return 0


def cmd_fit(cfg: RunConfig, out: Path, args) -> int:
    curve = tables.read_curve_csv(args.input)
    fit = fit_decay_curve(curve, weighted=not args.unweighted)
    payload = tables.fit_payload(fit)
    payload.update({"config_hash": cfg.config_hash, "seed": cfg.seed,
                    "input": str(args.input), "n_points": len(curve.points)})
    tables.write_json(out / "fit.json", payload)
    se = fit.standard_errors()
    print(f"detected_signal = {fit.detected_signal:.6g} /s (+- {se[0]:.2g})")
    print(f"rd              = {fit.rd:.6g} /s (+- {se[1]:.2g})")
    print(f"rb              = {fit.rb:.6g} /s (+- {se[2]:.2g})")
    print(f"residual_norm   = {fit.residual_norm:.3e}")
    print(f"wrote {out / 'fit.json'}")
    return 0


def cmd_optimize(cfg: RunConfig, out: Path, args) -> int:
    lines = [f"# config_hash={cfg.config_hash} seed={cfg.seed}\n",
             "intensity_mw_cm2,tau_c_s,tau_opt_s,error_mean,ci_low,ci_high,"
             "avg_time_s,worst_time_s,n_trials\n"]
    meta: dict = {"config_hash": cfg.config_hash, "seed": cfg.seed,
                  "mode": cfg.mode.value, "operating_points": {}}
    for intensity in cfg.intensities:
        rates = rates_for_operating_point(cfg.model, intensity)
        tau_c = cfg.resolved_tau_c(rates)
        tau_opt, point = optimize_tau_max(rates, cfg.mode, tau_c,
                                          (cfg.opt_lo, cfg.opt_hi),
                                          cfg.n_per_state, cfg.seed,
                                          step=cfg.opt_step,
                                          threshold=cfg.threshold,
                                          options=cfg.options,
                                          threads=cfg.threads,
                                          ci_level=cfg.ci_level)
        f = tables.fmt
        lines.append(",".join([
            f(intensity), f(tau_c), f(tau_opt), f(point.error_mean),
            f(point.error_ci[0]), f(point.error_ci[1]), f(point.avg_time),
            f(point.worst_time), str(point.n_trials)]) + "\n")
        meta["operating_points"][f"{intensity:g}"] = {
            "tau_c_s": tau_c, "tau_opt_s": tau_opt,
            "error_mean": point.error_mean, "avg_time_s": point.avg_time}
        print(f"intensity {intensity:g}: tau_max* = {tau_opt * 1e6:.1f} us, "
              f"error {point.error_mean:.3e} "
              f"[{point.error_ci[0]:.2e}, {point.error_ci[1]:.2e}], "
              f"avg time {point.avg_time * 1e6:.1f} us")
    (out / "optimize.csv").write_text("".join(lines), encoding="utf-8")
    tables.write_json(out / "optimize_meta.json", meta)
    print(f"wrote {out / 'optimize.csv'}")
    return 0


def cmd_report(cfg: RunConfig, out: Path, args) -> int:
    cmd_rates(cfg, out, args)
    sweeps = []
    meta: dict = {"config_hash": cfg.config_hash, "seed": cfg.seed,
                  "mode": cfg.mode.value, "n_per_state": cfg.n_per_state,
                  "operating_points": {}}
    for intensity in cfg.intensities:
        rates = rates_for_operating_point(cfg.model, intensity)
        tau_c = cfg.resolved_tau_c(rates)
        sweep = error_vs_time_curve(rates, cfg.mode, tau_c, cfg.sweep_grid(tau_c),
                                    cfg.n_per_state, cfg.seed,
                                    threshold=cfg.threshold, options=cfg.options,
                                    threads=cfg.threads, ci_level=cfg.ci_level,
                                    intensity=intensity)
        sweeps.append(sweep)
        tables.write_sweep_csv(out / f"sweep_{_tag(intensity)}.csv", sweep,
                               cfg.config_hash, cfg.seed)
        best = min(sweep.points, key=lambda p: p.error_mean)
        meta["operating_points"][f"{intensity:g}"] = {
            "tau_c_s": tau_c, "best_tau_max_s": best.tau_max,
            "best_error_mean": best.error_mean, "best_avg_time_s": best.avg_time}
    render_error_vs_time(sweeps, out / "error_vs_time.png")
    render_model_summary(cfg.model, cfg.intensities, out / "model_summary.png")
    tables.write_json(out / "report_meta.json", meta)
    print(f"wrote {out / 'error_vs_time.png'} and {out / 'model_summary.png'}")
    return 0


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = _configure(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return args.func(cfg, out, args)
    except (ConfigError, _UsageError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (IonreadError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
