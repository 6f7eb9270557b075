"""Shared fixtures and reference oracles for the test suite.

The oracle helpers here are deliberately independent of the package
internals: RK4 integration instead of the closed form, an explicit
splitmix64 transcription, and a chi-square builder that pools sparse bins.
"""

import math
import sys

import numpy as np
import pytest
from scipy.stats import chisquare, poisson

from ionread import RateModel, State, TrialRecord, rates_for_operating_point

_SCORECARD: list[str] = []


@pytest.fixture(scope="session")
def scorecard():
    """One verdict line per acceptance criterion, echoed after the summary.

    File-descriptor capture would swallow direct prints, so the lines are
    replayed by pytest_terminal_summary where they always reach the console.
    """

    def _add(tag, ok, detail):
        line = f"[{tag}] {detail} -> {'PASS' if ok else 'FAIL'}"
        _SCORECARD.append(line)
        sys.__stdout__.write("\n" + line + "\n")  # immediate under -s
        sys.__stdout__.flush()

    return _add


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _SCORECARD:
        terminalreporter.section("acceptance scorecard")
        for line in _SCORECARD:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def model():
    return RateModel()


@pytest.fixture(scope="session")
def rates8(model):
    return rates_for_operating_point(model, 8.0)


@pytest.fixture(scope="session")
def rates29(model):
    return rates_for_operating_point(model, 29.0)


@pytest.fixture(scope="session")
def rates36(model):
    return rates_for_operating_point(model, 36.0)


@pytest.fixture
def make_record():
    """Build a TrialRecord from a plain list of event times."""

    def _make(events, horizon=50e-6, prepared=State.BRIGHT, seed=0):
        return TrialRecord(prepared=prepared,
                           events=np.asarray(events, dtype=float),
                           horizon=horizon, transitions=None, seed=seed)

    return _make


@pytest.fixture
def record_fuzzer(make_record):
    """Random records with Poisson event counts and uniform times."""

    def _fuzz(rng, n, horizon=50e-6, mean_events=3.0):
        out = []
        for _ in range(n):
            k = rng.poisson(mean_events)
            times = np.sort(rng.uniform(0.0, horizon, size=k))
            out.append(make_record(times, horizon=horizon))
        return out

    return _fuzz


def _rk4_bright_population(p1_initial, rd, rb, t_final, n_steps=5000):
    """Fixed-step RK4 on dp1/dt = rb*(1 - p1) - rd*p1. Reference only."""
    if t_final == 0.0:
        return p1_initial

    def deriv(p):
        return rb * (1.0 - p) - rd * p

    h = t_final / n_steps
    p = p1_initial
    for _ in range(n_steps):
        k1 = deriv(p)
        k2 = deriv(p + 0.5 * h * k1)
        k3 = deriv(p + 0.5 * h * k2)
        k4 = deriv(p + h * k3)
        p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return p


@pytest.fixture(scope="session")
def rk4():
    return _rk4_bright_population


def _poisson_chi2_pvalue(counts, lam):
    """Chi-square goodness of fit of integer samples against Poisson(lam).

    Tail bins are pooled from the right until every expected count is at
    least 5, the usual validity rule for the chi-square approximation.
    """
    counts = np.asarray(counts)
    n = counts.size
    kmax = int(counts.max())
    ks = np.arange(kmax + 1)
    expected = n * poisson.pmf(ks, lam)
    expected = np.append(expected, n * poisson.sf(kmax, lam))  # open tail
    observed = np.append(np.bincount(counts, minlength=kmax + 1), 0)
    # pool from the right, then from the left, until expectations reach 5
    while expected.size > 2 and expected[-1] < 5.0:
        expected[-2] += expected[-1]
        observed[-2] += observed[-1]
        expected, observed = expected[:-1], observed[:-1]
    while expected.size > 2 and expected[0] < 5.0:
        expected[1] += expected[0]
        observed[1] += observed[0]
        expected, observed = expected[1:], observed[1:]
    stat, p = chisquare(observed, expected * observed.sum() / expected.sum())
    return float(p)


@pytest.fixture(scope="session")
def poisson_chi2():
    return _poisson_chi2_pvalue


def _wilson_reference(errors, trials, level):
    """Textbook Wilson score interval, transcribed independently."""
    from scipy.stats import norm

    z = norm.ppf(0.5 + level / 2.0)
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials
                         + z * z / (4.0 * trials * trials)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


@pytest.fixture(scope="session")
def wilson_reference():
    return _wilson_reference
