"""Figure rendering for the report command.

Only this module touches matplotlib, and only through the Agg backend:
figures go to files, never to a display.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dynamics import expected_counts
from .experiment import SweepResult
from .rates import RateModel, rates_for_operating_point

_RC = {
    "figure.dpi": 130,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.25,
    "lines.linewidth": 1.4,
    "legend.frameon": False,
}


def _label(sweep: SweepResult, index: int) -> str:
    if sweep.operating_point is not None:
        return f"{sweep.operating_point:g} mW/cm$^2$"
    return f"sweep {index}"


def render_error_vs_time(sweeps: list[SweepResult], path) -> None:
    """Mean detection error against window length and against mean duration.

    One line per operating point; the marker sits at the grid point nearest
    the one-photon cutoff, where the trade-off curve kinks.
    """
    with plt.rc_context(_RC):
        fig, (ax_tau, ax_avg) = plt.subplots(1, 2, figsize=(8.6, 3.4))
        for i, sweep in enumerate(sweeps):
            taus = np.array([p.tau_max for p in sweep.points])
            avgs = np.array([p.avg_time for p in sweep.points])
            errs = np.array([p.error_mean for p in sweep.points])
            lo = np.array([p.error_ci[0] for p in sweep.points])
            hi = np.array([p.error_ci[1] for p in sweep.points])
            label = _label(sweep, i)
            line, = ax_tau.plot(taus * 1e6, errs, label=label)
            ax_tau.fill_between(taus * 1e6, lo, hi, alpha=0.2,
                                color=line.get_color(), linewidth=0)
            ax_avg.plot(avgs * 1e6, errs, label=label, color=line.get_color())
            if sweep.tau_c > 0.0 and taus.size:
                k = int(np.argmin(np.abs(taus - sweep.tau_c)))
                ax_tau.plot(taus[k] * 1e6, errs[k], "o", ms=4,
                            color=line.get_color())
                ax_avg.plot(avgs[k] * 1e6, errs[k], "o", ms=4,
                            color=line.get_color())
        for ax, xlabel in ((ax_tau, "detection window $\\tau_{max}$ (µs)"),
                           (ax_avg, "average detection time (µs)")):
            ax.set_yscale("log")
            ax.set_xlabel(xlabel)
            ax.set_ylabel("mean detection error")
        ax_tau.legend(loc="upper right")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def render_model_summary(model: RateModel, intensities, path) -> None:
    """Expected bright-count curves and operating rates versus intensity."""
    intensities = [float(i) for i in intensities]
    with plt.rc_context(_RC):
        fig, (ax_counts, ax_rates) = plt.subplots(1, 2, figsize=(8.6, 3.4))

        for intensity in intensities:
            r = rates_for_operating_point(model, intensity)
            total = r.rd + r.rb
            tau_end = 5.0 / total if total > 0.0 else 1e-3
            taus = np.linspace(0.0, tau_end, 300)
            counts = expected_counts(taus, 1.0, r.detected_signal, r.rd, r.rb)
            ax_counts.plot(taus * 1e3, counts, label=f"{intensity:g} mW/cm$^2$")
        ax_counts.set_xlabel("detection duration (ms)")
        ax_counts.set_ylabel("expected bright-state counts")
        ax_counts.legend(loc="lower right")

        grid = np.linspace(0.0, max(intensities) * 1.15 + 1e-9, 60)
        table = [rates_for_operating_point(model, i) for i in grid]
        for name, values in (
            ("detected signal / 1000", [r.detected_signal / 1e3 for r in table]),
            ("bright$\\to$dark pumping", [r.rd for r in table]),
            ("dark$\\to$bright pumping", [r.rb for r in table]),
            ("background", [r.rdc for r in table]),
        ):
            ax_rates.plot(grid, values, label=name)
        for intensity in intensities:
            ax_rates.axvline(intensity, color="0.6", linestyle=":", linewidth=0.8)
        ax_rates.set_xlabel("intensity (mW/cm$^2$)")
        ax_rates.set_ylabel("rate (1/s)")
        ax_rates.legend(loc="upper left")

        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
