"""Delimited data files and structured reports.

All data files are comma-separated with a one-line header, preceded by a
single comment line carrying the config hash and seed. Floats are printed
at 9 significant digits so byte-identity across runs is a meaningful
determinism check; nothing time-of-day dependent is ever written.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import DataFormatError
from .estimation import DecayCurve, RateFit
from .experiment import SweepResult
from .protocols import DetectionOutcome
from .stream import State, TrialRecord


def fmt(x: float) -> str:
    """9-significant-digit float formatting used in every data file."""
    return f"{x:.9g}"


def _stamp(config_hash: str, seed: int) -> str:
    return f"# config_hash={config_hash} seed={seed}\n"


def _write(path, lines: list[str]) -> None:
    Path(path).write_text("".join(lines), encoding="utf-8")


def write_events_csv(path, records: list[TrialRecord], config_hash: str,
                     seed: int) -> None:
    """One row per detected event: trial_id,prepared,timestamp_s."""
    lines = [_stamp(config_hash, seed), "trial_id,prepared,timestamp_s\n"]
    for i, r in enumerate(records):
        label = r.prepared.value
        for t in r.events:
            lines.append(f"{i},{label},{fmt(t)}\n")
    _write(path, lines)


def write_trials_csv(path, records: list[TrialRecord], config_hash: str,
                     seed: int) -> None:
    """Per-trial summary: counts and the first two event times (blank if absent)."""
    lines = [_stamp(config_hash, seed),
             "trial_id,prepared,trial_seed,n_events,first_event_s,second_event_s\n"]
    for i, r in enumerate(records):
        ev = r.events
        first = fmt(ev[0]) if ev.size >= 1 else ""
        second = fmt(ev[1]) if ev.size >= 2 else ""
        lines.append(f"{i},{r.prepared.value},{r.seed},{ev.size},{first},{second}\n")
    _write(path, lines)


def write_outcomes_csv(path, outcomes: list[tuple[int, DetectionOutcome]],
                       config_hash: str, seed: int) -> None:
    """Per-trial protocol outcomes: trial_id,verdict,decision_time_s,photons_used."""
    lines = [_stamp(config_hash, seed),
             "trial_id,verdict,decision_time_s,photons_used\n"]
    for trial_id, out in outcomes:
        lines.append(f"{trial_id},{out.verdict.value},{fmt(out.decision_time)},"
                     f"{out.photons_used}\n")
    _write(path, lines)


def write_curve_csv(path, curve: DecayCurve, config_hash: str, seed: int) -> None:
    lines = [_stamp(config_hash, seed), "tau_s,mean_counts,n_trials\n"]
    for tau, mean, n in curve.points:
        lines.append(f"{fmt(tau)},{fmt(mean)},{n}\n")
    _write(path, lines)


def read_curve_csv(path) -> DecayCurve:
    """Parse a tau_s,mean_counts,n_trials table; errors name row and column."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    rows = [(i + 1, line.strip()) for i, line in enumerate(text.splitlines())]
    rows = [(n, line) for n, line in rows if line and not line.startswith("#")]
    if not rows:
        raise DataFormatError(f"{path}: no header row")
    header_no, header = rows[0]
    names = [c.strip() for c in header.split(",")]
    if names != ["tau_s", "mean_counts", "n_trials"]:
        raise DataFormatError(
            f"{path}: line {header_no}: expected header tau_s,mean_counts,n_trials")
    points = []
    for line_no, line in rows[1:]:
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 3:
            raise DataFormatError(f"{path}: line {line_no}: expected 3 columns, "
                                  f"got {len(cells)}")
        parsed = []
        for name, cell, cast in zip(names, cells, (float, float, int)):
            try:
                parsed.append(cast(cell))
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {line_no}: column {name}: "
                    f"cannot parse {cell!r}") from None
        points.append((parsed[0], parsed[1], parsed[2]))
    if not points:
        raise DataFormatError(f"{path}: no data rows")
    try:
        return DecayCurve(points)
    except Exception as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


SWEEP_HEADER = ("tau_max_s,tau_c_s,error_mean,ci_low,ci_high,"
                "avg_time_s,worst_time_s,n_trials\n")


def write_sweep_csv(path, sweep: SweepResult, config_hash: str, seed: int) -> None:
    lines = [_stamp(config_hash, seed), SWEEP_HEADER]
    for p in sweep.points:
        lines.append(",".join([
            fmt(p.tau_max), fmt(p.tau_c), fmt(p.error_mean),
            fmt(p.error_ci[0]), fmt(p.error_ci[1]),
            fmt(p.avg_time), fmt(p.worst_time), str(p.n_trials),
        ]) + "\n")
    _write(path, lines)


RATES_HEADER = ("intensity_mw_cm2,s0,r0_per_s,detected_signal_per_s,"
                "rd_per_s,rb_per_s,rdc_per_s,tau_c_s\n")


def write_rates_csv(path, rows: list[tuple], config_hash: str, seed: int) -> None:
    """Rows of (intensity, ScatteringRates, tau_c)."""
    lines = [_stamp(config_hash, seed), RATES_HEADER]
    for intensity, r, tau_c in rows:
        lines.append(",".join([
            fmt(intensity), fmt(r.s0), fmt(r.r0), fmt(r.detected_signal),
            fmt(r.rd), fmt(r.rb), fmt(r.rdc), fmt(tau_c),
        ]) + "\n")
    _write(path, lines)


def write_json(path, payload: dict) -> None:
    """Structured report/metadata document (sorted keys, no timestamps)."""
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def fit_payload(fit: RateFit) -> dict:
    cov = fit.covariance.tolist() if fit.covariance is not None else None
    se = fit.standard_errors()
    return {
        "detected_signal_per_s": fit.detected_signal,
        "rd_per_s": fit.rd,
        "rb_per_s": fit.rb,
        "residual_norm": fit.residual_norm,
        "stderr_detected_signal_per_s": float(se[0]),
        "stderr_rd_per_s": float(se[1]),
        "stderr_rb_per_s": float(se[2]),
        "covariance": cov,
    }


def rates_payload(r) -> dict:
    return {"s0": r.s0, "r0_per_s": r.r0,
            "detected_signal_per_s": r.detected_signal,
            "rd_per_s": r.rd, "rb_per_s": r.rb, "rdc_per_s": r.rdc}
