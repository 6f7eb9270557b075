"""Deterministic two-state dynamics and decision-time heuristics.

The latent qubit state hops between a bright manifold and a dark state with
pumping rates ``rd`` (bright -> dark) and ``rb`` (dark -> bright). This
module carries the closed-form solutions built on that rate equation: the
bright population p1(t), the expected cumulative detected-photon count, the
short-time first-photon likelihoods for the two prepared states, and the
cutoff time at which a lone first photon stops being evidence of brightness.

Everything here is analytic; the Monte Carlo truth lives in ``stream``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .rates import ScatteringRates


@dataclass(frozen=True)
class PopulationState:
    """Bright/dark occupation probabilities at one instant."""

    p1: float
    p0: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.p1 <= 1.0 and 0.0 <= self.p0 <= 1.0):
            raise InvalidParameterError("populations must be in [0, 1]")
        if abs(self.p0 + self.p1 - 1.0) > 1e-12:
            raise InvalidParameterError("populations must sum to 1")

    @classmethod
    def bright(cls, p1: float) -> "PopulationState":
        return cls(p1=p1, p0=1.0 - p1)


def bright_population(t, p1_initial: float, rd: float, rb: float):
    """Bright-manifold population p1(t) under the two-state rate equation.

    Solves dp1/dt = rb*(1 - p1) - rd*p1 from p1(0) = p1_initial:

        p1(t) = p_inf + (p1_initial - p_inf) * exp(-(rd + rb) t),
        p_inf = rb / (rd + rb).

    ``t`` may be a scalar or array (seconds); rd = rb = 0 returns the
    initial value unchanged.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise InvalidParameterError("t must be >= 0")
    if not 0.0 <= p1_initial <= 1.0:
        raise InvalidParameterError("p1_initial must be in [0, 1]")
    if rd < 0.0 or rb < 0.0:
        raise InvalidParameterError("rates must be >= 0")
    total = rd + rb
    if total == 0.0:
        out = np.full_like(t, p1_initial)
        return float(out) if out.ndim == 0 else out
    p_inf = rb / total
    out = p_inf + (p1_initial - p_inf) * np.exp(-total * t)
    return float(out) if out.ndim == 0 else out


def expected_counts(tau, p1_initial: float, detected_signal: float,
                    rd: float, rb: float):
    """Expected detected-photon count in a window of length tau.

    Integral of detected_signal * p1(t) over [0, tau], in closed form:

        n(tau) = eps*R0 * [p_inf*tau + (p1_initial - p_inf)(1 - e^{-R tau})/R]

    with R = rd + rb. Background counts are not included. ``tau`` may be a
    scalar or array.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0.0):
        raise InvalidParameterError("tau must be >= 0")
    if not 0.0 <= p1_initial <= 1.0:
        raise InvalidParameterError("p1_initial must be in [0, 1]")
    if detected_signal < 0.0 or rd < 0.0 or rb < 0.0:
        raise InvalidParameterError("rates must be >= 0")
    total = rd + rb
    if total == 0.0:
        out = detected_signal * p1_initial * tau
        return float(out) if out.ndim == 0 else out
    p_inf = rb / total
    # -expm1(-x)/x is the stable form of (1 - e^-x)/x near 0
    out = detected_signal * (p_inf * tau
                             + (p1_initial - p_inf) * (-np.expm1(-total * tau)) / total)
    return float(out) if out.ndim == 0 else out


def one_photon_likelihoods(t, rates: ScatteringRates):
    """Short-time first-photon probabilities (dark-prepared, bright-prepared).

    Returns the pair (P0, P1) used to reason about a single detected photon:

        P0(t) = rdc * t            (background only; linear growth)
        P1(t) = (rd / eps*R0) * (1 - exp(-eps*R0 * t))

    P1 is the probability that a bright ion yields exactly one ambiguous
    photon: it saturates at rd/(eps*R0), the chance of pumping dark after a
    single detection. Both are the standard short-time approximations, kept
    deliberately simple: they only serve to place the cutoff time.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise InvalidParameterError("t must be >= 0")
    p0 = rates.rdc * t
    if rates.detected_signal == 0.0:
        p1 = rates.rd * t  # limit of the saturating form
    else:
        p1 = (rates.rd / rates.detected_signal) * (-np.expm1(-rates.detected_signal * t))
    if t.ndim == 0:
        return float(p0), float(p1)
    return p0, p1


def optimal_cutoff(rd: float, rdc: float, detected_signal: float) -> float:
    """Cutoff time tau_c = ln(rd/rdc) / detected_signal, in seconds.

    Before tau_c a lone first photon is more likely to come from a bright
    ion about to pump dark than from background, so the one-photon branch of
    the adaptive protocol should only fire for t < tau_c. When rd <= rdc a
    first photon is never bright-favoring and the cutoff is 0.
    """
    if detected_signal <= 0.0:
        raise InvalidParameterError("detected_signal must be positive")
    if rd <= 0.0 or rdc <= 0.0:
        raise InvalidParameterError("rd and rdc must be positive")
    if rd <= rdc:
        return 0.0
    return math.log(rd / rdc) / detected_signal
