"""Rate recovery from measured count data.

Two calibration procedures: fitting the mean cumulative-count curve n(tau)
to the closed-form model (recovering detected_signal, rd, rb), and fitting
a zero-intercept line to rate-versus-drive points (the pumping rates vanish
at zero drive, so the line is forced through the origin).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .dynamics import expected_counts
from .errors import (DegenerateDataError, FitFailureError,
                     InsufficientDataError, InvalidParameterError)
from .stream import TrialRecord


@dataclass
class DecayCurve:
    """Averaged detected counts versus window length.

    ``points`` is a list of (tau_s, mean_counts, n_trials) tuples with
    strictly increasing taus; the arrays are exposed as properties.
    """

    points: list[tuple[float, float, int]]

    def __post_init__(self) -> None:
        taus = self.taus
        if taus.size and np.any(np.diff(taus) <= 0.0):
            raise InvalidParameterError("taus must be strictly increasing")
        if np.any(self.mean_counts < 0.0):
            raise InvalidParameterError("mean_counts must be >= 0")
        if any(int(n) < 1 for _, _, n in self.points):
            raise InvalidParameterError("n_trials must be >= 1")

    @property
    def taus(self) -> np.ndarray:
        return np.array([p[0] for p in self.points], dtype=float)

    @property
    def mean_counts(self) -> np.ndarray:
        return np.array([p[1] for p in self.points], dtype=float)

    @property
    def n_trials(self) -> np.ndarray:
        return np.array([p[2] for p in self.points], dtype=float)


@dataclass
class RateFit:
    """Fitted rates with a linearized covariance.

    residual_norm is the relative L2 misfit ||model - data|| / ||data||
    (dimensionless). covariance is the 3x3 matrix over
    (detected_signal, rd, rb); absolute when the fit used model-variance
    weights, scaled by the reduced chi-square otherwise.
    """

    detected_signal: float
    rd: float
    rb: float
    residual_norm: float = 0.0
    covariance: np.ndarray | None = None

    def standard_errors(self) -> np.ndarray:
        if self.covariance is None:
            return np.full(3, np.nan)
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def curve_from_records(records: list[TrialRecord], taus) -> DecayCurve:
    """Average cumulative event counts of an ensemble on a tau grid."""
    taus = np.asarray(taus, dtype=float)
    if taus.size == 0:
        raise InvalidParameterError("tau grid must be nonempty")
    if not records:
        raise InvalidParameterError("records must be nonempty")
    horizon = min(r.horizon for r in records)
    if np.any(taus > horizon):
        raise InvalidParameterError("tau grid exceeds ensemble horizon")
    sums = np.zeros(taus.size)
    for r in records:
        sums += np.searchsorted(r.events, taus, side="right")
    means = sums / len(records)
    return DecayCurve([(float(t), float(m), len(records))
                       for t, m in zip(taus, means)])


def _count_variance(taus: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Per-trial variance of detected counts under the fitted model.

    Counts are Poisson conditioned on the accumulated bright time B(tau),
    so Var[N] = mean + detected_signal^2 * Var[B]. Var[B] follows from the
    exponential autocovariance of the bright indicator started bright:
    Cov(X(t), X(t+u)) = p1(t)(1 - p1(t)) e^{-R u}.
    """
    sig, rd, rb = x
    mean = expected_counts(taus, 1.0, sig, rd, rb)
    total = rd + rb
    if total * taus[-1] < 1e-12:
        return mean
    p_inf = rb / total
    a = 1.0 - p_inf
    e1 = np.exp(-total * taus)
    c0 = p_inf * (1.0 - p_inf)
    c1 = a * (1.0 - 2.0 * p_inf)
    i0 = c0 * (taus - (1.0 - e1) / total)
    i1 = c1 * ((1.0 - e1) / total - taus * e1)
    i2 = -a * a * ((1.0 - e1 * e1) / (2.0 * total) - e1 * (1.0 - e1) / total)
    var_b = 2.0 / total * (i0 + i1 + i2)
    return mean + sig * sig * var_b


def _geometry_guess(taus: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Initial (detected_signal, rd, rb) from the curve's shape.

    Early slope gives detected_signal (p1 starts at 1); the late-time
    asymptote slope/intercept give the equilibrium population and the total
    relaxation rate.
    """
    pos = np.nonzero(y > 0.0)[0]
    i0 = pos[0]
    s_early = y[i0] / taus[i0]
    s_late = (y[-1] - y[-2]) / (taus[-1] - taus[-2])
    p_inf = min(max(s_late / s_early, 0.0), 0.9)
    amplitude = y[-1] - s_late * taus[-1]
    if amplitude > 1e-9 * y[-1]:
        total = s_early * (1.0 - p_inf) / amplitude
    else:
        # no resolvable curvature: start at the zero-relaxation boundary
        total = 1e-6 / taus[-1]
        p_inf = 0.0
    return np.array([s_early, total * (1.0 - p_inf), total * p_inf])


def fit_decay_curve(curve: DecayCurve, initial_guess=None, *,
                    weighted: bool = True, max_nfev: int = 400) -> RateFit:
    """Fit (detected_signal, rd, rb) to a bright-prepared count curve.

    The model is ``expected_counts(tau, 1, detected_signal, rd, rb)`` with
    all three parameters bounded below by zero. A first pass weights points
    by sqrt(n_trials / mean_counts) (inverse Poisson error); a second pass
    reweights with the model's own count variance, which exceeds Poisson
    once state flips contribute, and its covariance is reported as absolute.
    Pass ``weighted=False`` for a plain least-squares fit with a reduced
    chi-square covariance scale.

    Parameters
    ----------
    curve : DecayCurve
        At least 4 points; should span both the early linear and the
        saturating regime for the parameters to be identifiable.
    initial_guess : RateFit or 3-sequence, optional
        Starting point; by default derived from the curve geometry.

    Raises
    ------
    InsufficientDataError, DegenerateDataError, FitFailureError
    """
    taus = curve.taus
    y = curve.mean_counts
    n = curve.n_trials
    if taus.size < 4:
        raise InsufficientDataError("need at least 4 curve points")
    if not np.any(y > 0.0):
        raise DegenerateDataError("curve is identically zero")

    if initial_guess is None:
        x0 = _geometry_guess(taus, y)
    elif isinstance(initial_guess, RateFit):
        x0 = np.array([initial_guess.detected_signal, initial_guess.rd,
                       initial_guess.rb], dtype=float)
    else:
        x0 = np.asarray(initial_guess, dtype=float)
        if x0.shape != (3,):
            raise InvalidParameterError("initial_guess must have 3 entries")
    x0 = np.clip(x0, 0.0, None)

    def solve(w, start):
        def residuals(x):
            return w * (expected_counts(taus, 1.0, x[0], x[1], x[2]) - y)
        return least_squares(residuals, start, bounds=(0.0, np.inf),
                             method="trf", x_scale="jac", max_nfev=max_nfev)

    if weighted:
        w = np.sqrt(n / np.maximum(y, 0.5))  # floor keeps zero-count rows finite
        result = solve(w, x0)
        if result.success:
            w = np.sqrt(n / np.maximum(_count_variance(taus, result.x), 1e-12))
            result = solve(w, result.x)
        covariance = np.linalg.pinv(result.jac.T @ result.jac)
    else:
        result = solve(np.ones_like(y), x0)
        dof = taus.size - 3
        s2 = 2.0 * result.cost / dof if dof > 0 else 0.0
        covariance = s2 * np.linalg.pinv(result.jac.T @ result.jac)

    model = expected_counts(taus, 1.0, *result.x)
    residual_norm = float(np.linalg.norm(model - y) / np.linalg.norm(y))

    fit = RateFit(detected_signal=float(result.x[0]), rd=float(result.x[1]),
                  rb=float(result.x[2]), residual_norm=residual_norm,
                  covariance=covariance)
    if not result.success:
        raise FitFailureError(f"fit did not converge: {result.message}", best=fit)
    return fit


def fit_rate_vs_power(points) -> float:
    """Zero-intercept least-squares slope of rate-versus-drive points.

    ``points`` is a sequence of (drive, rate) pairs; drive may be beam
    power or intensity, and the returned slope carries rate per that unit.
    """
    pts = list(points)
    if len(pts) < 2:
        raise InsufficientDataError("need at least 2 points")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    if np.any(y < 0.0):
        raise InvalidParameterError("rates must be >= 0")
    sxx = float(np.dot(x, x))
    if sxx == 0.0:
        raise DegenerateDataError("all drive values are zero")
    return float(np.dot(x, y) / sxx)
