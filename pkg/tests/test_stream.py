"""Statistical and structural validation of the event-stream sampler.

The sampler is exact (no time discretization), so its output must match
the textbook laws sharply: Poisson counts in fixed windows, exponential
first-passage and residual times, uniform order statistics within a
window, and the two-state occupation law. Goodness-of-fit bars are
p > 1e-3 and 4-sigma moment windows; every test is seeded, so outcomes
are reproducible, not flaky.
"""

import math

import numpy as np
import pytest
from scipy import stats

from ionread import (
    InvalidParameterError,
    ScatteringRates,
    State,
    StreamOptions,
    TrialRecord,
    bright_population,
    expected_counts,
    simulate_ensemble,
    simulate_trial,
    trial_seed,
)

SIGNAL = ScatteringRates(detected_signal=2e5, rd=150.0, rb=10.0, rdc=30.0)


class TestDeterminism:
    def test_identical_seed_identical_trial(self):
        a = simulate_trial(State.BRIGHT, SIGNAL, 1e-4, seed=123)
        b = simulate_trial(State.BRIGHT, SIGNAL, 1e-4, seed=123)
        assert np.array_equal(a.events, b.events)
        assert a.transitions == b.transitions
        assert a.prepared is b.prepared and a.seed == b.seed == 123

    def test_different_seeds_differ(self):
        a = simulate_trial(State.BRIGHT, SIGNAL, 1e-4, seed=1)
        b = simulate_trial(State.BRIGHT, SIGNAL, 1e-4, seed=2)
        assert not np.array_equal(a.events, b.events)

    def test_ensemble_reruns_bit_identical(self):
        kw = dict(prepared=State.BRIGHT, rates=SIGNAL, horizon=5e-5,
                  n_trials=50, base_seed=77)
        one = simulate_ensemble(**kw)
        two = simulate_ensemble(**kw)
        for a, b in zip(one, two):
            assert np.array_equal(a.events, b.events)
            assert a.transitions == b.transitions

    def test_ensemble_seeds_follow_trial_index(self):
        records = simulate_ensemble(State.DARK, SIGNAL, 1e-5, 20, base_seed=9)
        assert [r.seed for r in records] == [trial_seed(9, i) for i in range(20)]

    def test_singleton_ensemble_equals_direct_trial(self):
        one = simulate_ensemble(State.BRIGHT, SIGNAL, 1e-4, 1, base_seed=5)[0]
        direct = simulate_trial(State.BRIGHT, SIGNAL, 1e-4, trial_seed(5, 0))
        assert np.array_equal(one.events, direct.events)
        assert one.transitions == direct.transitions

    def test_worker_count_invariance(self):
        serial = simulate_ensemble(State.BRIGHT, SIGNAL, 5e-5, 64, base_seed=3)
        parallel = simulate_ensemble(State.BRIGHT, SIGNAL, 5e-5, 64, base_seed=3,
                                     threads=3)
        assert len(serial) == len(parallel) == 64
        for a, b in zip(serial, parallel):
            assert np.array_equal(a.events, b.events)
            assert a.transitions == b.transitions and a.seed == b.seed


class TestTrialSeeds:
    @staticmethod
    def _splitmix(x):
        mask = (1 << 64) - 1
        x &= mask
        x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & mask
        x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & mask
        return x ^ (x >> 31)

    def test_matches_splitmix_stream(self):
        golden = 0x9E3779B97F4A7C15
        for base in (0, 42, 2**63 + 11):
            for index in (0, 1, 17, 10**6):
                expected = self._splitmix((base + (index + 1) * golden) % 2**64)
                assert trial_seed(base, index) == expected

    def test_no_collisions_over_large_range(self):
        seeds = {trial_seed(42, i) for i in range(20000)}
        assert len(seeds) == 20000

    def test_rejects_negative_index(self):
        with pytest.raises(InvalidParameterError):
            trial_seed(1, -1)


class TestCountStatistics:
    def test_no_rates_no_events(self):
        r = simulate_trial(State.BRIGHT, ScatteringRates(), 1e-3, seed=4)
        assert r.events.size == 0
        assert r.transitions == [(0.0, State.BRIGHT)]

    def test_bright_counts_are_poisson(self, poisson_chi2):
        # frozen bright state emitting at 5e4/s for 100 us: mean 5
        rates = ScatteringRates(detected_signal=5e4)
        records = simulate_ensemble(State.BRIGHT, rates, 1e-4, 20000, base_seed=21)
        counts = np.array([r.events.size for r in records])
        lam = 5.0
        assert abs(counts.mean() - lam) < 4.0 * math.sqrt(lam / counts.size)
        assert poisson_chi2(counts, lam) > 1e-3

    def test_dark_background_counts_are_poisson(self, poisson_chi2):
        # the signal rate must not leak into the dark state
        rates = ScatteringRates(detected_signal=1e6, rdc=3e4)
        records = simulate_ensemble(State.DARK, rates, 1.5e-4, 20000, base_seed=22)
        counts = np.array([r.events.size for r in records])
        lam = 3e4 * 1.5e-4
        assert abs(counts.mean() - lam) < 4.0 * math.sqrt(lam / counts.size)
        assert poisson_chi2(counts, lam) > 1e-3

    def test_event_positions_are_uniform(self):
        # conditioned on the count, Poisson arrivals are uniform order stats
        rates = ScatteringRates(detected_signal=4e4)
        records = simulate_ensemble(State.BRIGHT, rates, 1e-4, 5000, base_seed=23)
        pooled = np.concatenate([r.events for r in records]) / 1e-4
        assert stats.kstest(pooled, "uniform").pvalue > 1e-3

    def test_mean_counts_track_population_integral(self):
        rates = ScatteringRates(detected_signal=2e5, rd=170.0, rb=10.0)
        horizon = 2e-4
        records = simulate_ensemble(State.BRIGHT, rates, horizon, 20000,
                                    base_seed=24)
        counts = np.array([r.events.size for r in records])
        ref = expected_counts(horizon, 1.0, 2e5, 170.0, 10.0)
        se = counts.std(ddof=1) / math.sqrt(counts.size)
        assert abs(counts.mean() - ref) < 4.0 * se


class TestLatentProcess:
    def test_first_passage_is_exponential(self):
        rd = 150.0
        rates = ScatteringRates(rd=rd, rb=40.0)
        records = simulate_ensemble(State.BRIGHT, rates, 20.0 / rd, 20000,
                                    base_seed=31)
        first = np.array([r.transitions[1][0] for r in records
                          if len(r.transitions) > 1])
        assert first.size == 20000  # horizon is 20 mean lifetimes
        assert stats.kstest(first, "expon", args=(0.0, 1.0 / rd)).pvalue > 1e-3

    def test_occupation_matches_population_law(self):
        rd, rb = 150.0, 40.0
        total = rd + rb
        rates = ScatteringRates(rd=rd, rb=rb)
        records = simulate_ensemble(State.BRIGHT, rates, 3.0 / total, 20000,
                                    base_seed=32)
        grid = np.linspace(0.1 / total, 3.0 / total, 10)
        n = len(records)
        bright_counts = np.zeros(grid.size)
        for r in records:
            times = np.array([t for t, _ in r.transitions[1:]])
            jumps = np.searchsorted(times, grid, side="right")
            bright_counts += (jumps % 2 == 0)  # started bright, alternates
        expected = bright_population(grid, 1.0, rd, rb)
        sigma = np.sqrt(expected * (1.0 - expected) / n)
        assert np.all(np.abs(bright_counts / n - expected) < 4.0 * sigma)

    def test_signal_events_only_while_bright(self):
        rates = ScatteringRates(detected_signal=1e5, rd=200.0, rb=50.0)
        records = simulate_ensemble(State.BRIGHT, rates, 5e-3, 300, base_seed=33)
        checked = 0
        for r in records:
            for t in r.events:
                assert r.state_at(t) is State.BRIGHT
                checked += 1
        assert checked > 1000

    def test_background_events_occur_while_dark(self):
        rates = ScatteringRates(rdc=100.0)
        records = simulate_ensemble(State.DARK, rates, 1e-2, 200, base_seed=34)
        total = sum(r.events.size for r in records)
        assert total > 0
        for r in records:
            for t in r.events:
                assert r.state_at(t) is State.DARK

    def test_background_gaps_are_memoryless(self):
        # first event, and residual time past a fixed cut, are both Exp(rdc)
        rdc = 500.0
        rates = ScatteringRates(rdc=rdc)
        records = simulate_ensemble(State.DARK, rates, 4e-2, 20000, base_seed=35)
        first = np.array([r.events[0] for r in records if r.events.size])
        assert first.size > 19990
        assert stats.kstest(first, "expon", args=(0.0, 1.0 / rdc)).pvalue > 1e-3
        cut = 5e-3
        residual = []
        for r in records:
            later = r.events[r.events > cut]
            if later.size:
                residual.append(later[0] - cut)
        residual = np.asarray(residual)
        assert residual.size > 19990
        assert stats.kstest(residual, "expon", args=(0.0, 1.0 / rdc)).pvalue > 1e-3


class TestOptions:
    def test_dead_time_filters_close_pairs(self):
        dead = 5e-6
        raw = simulate_trial(State.DARK, ScatteringRates(rdc=2e5), 1e-3, seed=41)
        filtered = simulate_trial(State.DARK, ScatteringRates(rdc=2e5), 1e-3,
                                  seed=41, options=StreamOptions(dead_time=dead))
        expected, last = [], -math.inf
        for t in raw.events:  # nonparalyzable: accept, then block the window
            if t - last >= dead:
                expected.append(t)
                last = t
        assert np.array_equal(filtered.events, np.asarray(expected))
        assert np.all(np.diff(filtered.events) >= dead)

    def test_quantization_rounds_to_grid(self):
        res = 1e-8
        raw = simulate_trial(State.BRIGHT, SIGNAL, 1e-4, seed=42)
        quant = simulate_trial(State.BRIGHT, SIGNAL, 1e-4, seed=42,
                               options=StreamOptions(time_resolution=res))
        expected = np.unique(np.minimum(np.round(raw.events / res) * res, 1e-4))
        assert np.array_equal(quant.events, expected)
        assert np.all(np.abs(quant.events / res - np.round(quant.events / res))
                      < 1e-9)
        quant.validate()

    def test_preparation_error_flips_initial_state(self):
        opts = StreamOptions(prep_error=1.0)
        r = simulate_trial(State.BRIGHT, SIGNAL, 1e-5, seed=43, options=opts)
        assert r.prepared is State.BRIGHT  # the label stays
        assert r.transitions[0] == (0.0, State.DARK)

    def test_preparation_error_rate(self):
        # with signal only, flipped trials are exactly the empty ones
        rates = ScatteringRates(detected_signal=2e5)
        opts = StreamOptions(prep_error=0.3)
        records = simulate_ensemble(State.BRIGHT, rates, 5e-5, 5000,
                                    base_seed=44, options=opts)
        with_events = sum(1 for r in records if r.events.size)
        frac = with_events / len(records)
        assert abs(frac - 0.7) < 4.0 * math.sqrt(0.3 * 0.7 / 5000)

    def test_transitions_can_be_dropped(self):
        opts = StreamOptions(record_transitions=False)
        r = simulate_trial(State.BRIGHT, SIGNAL, 1e-5, seed=45, options=opts)
        assert r.transitions is None
        with pytest.raises(InvalidParameterError):
            r.state_at(1e-6)

    @pytest.mark.parametrize("kwargs", [
        {"dead_time": -1.0},
        {"time_resolution": 0.0},
        {"prep_error": 1.5},
    ])
    def test_rejects_invalid_options(self, kwargs):
        with pytest.raises(InvalidParameterError):
            StreamOptions(**kwargs)


class TestRecordStructure:
    def test_simulated_records_validate(self):
        for prepared in (State.BRIGHT, State.DARK):
            for seed in range(30):
                r = simulate_trial(prepared, SIGNAL, 2e-4, seed=seed)
                r.validate()
                if r.events.size:
                    assert 0.0 <= r.events[0] and r.events[-1] <= r.horizon
                    assert np.all(np.diff(r.events) > 0.0)

    def test_count_within(self):
        r = TrialRecord(State.BRIGHT, np.array([1.0, 2.0, 3.0]), 10.0)
        assert r.count_within(0.5) == 0
        assert r.count_within(2.0) == 2  # boundary inclusive
        assert r.count_within(10.0) == 3

    def test_validate_rejects_tampering(self):
        with pytest.raises(InvalidParameterError):
            TrialRecord(State.BRIGHT, np.array([0.2, 0.1]), 1.0).validate()
        with pytest.raises(InvalidParameterError):
            TrialRecord(State.BRIGHT, np.array([0.5, 2.0]), 1.0).validate()
        with pytest.raises(InvalidParameterError):
            TrialRecord(State.BRIGHT, np.array([]), -1.0).validate()
        bad = TrialRecord(State.BRIGHT, np.array([]), 1.0,
                          transitions=[(0.0, State.BRIGHT), (0.1, State.BRIGHT)])
        with pytest.raises(InvalidParameterError):
            bad.validate()

    def test_rejects_bad_simulation_arguments(self):
        with pytest.raises(InvalidParameterError):
            simulate_trial(State.BRIGHT, SIGNAL, 0.0, seed=1)
        with pytest.raises(InvalidParameterError):
            simulate_ensemble(State.BRIGHT, SIGNAL, 1e-5, 0, base_seed=1)
        with pytest.raises(InvalidParameterError):
            simulate_ensemble(State.BRIGHT, SIGNAL, 1e-5, 10, base_seed=1,
                              threads=0)
