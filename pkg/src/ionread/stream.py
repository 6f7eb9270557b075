"""Exact sampler for detected-photon event streams.

The latent qubit state is a two-state continuous-time Markov jump process
(bright <-> dark, rates ``rd`` and ``rb``); detected events arrive as a
Poisson process whose rate depends on the latent state: detected_signal +
rdc while bright, rdc while dark. Sampling is exact, with no time
discretization: each latent sojourn length is drawn from its exponential
law, and the events inside the sojourn are drawn as a Poisson count placed
by uniform order statistics. That construction is equal in law to drawing
every competing exponential individually, and costs O(events) instead of
O(events + rate*horizon) bookkeeping.

Determinism contract: a trial is a pure function of (prepared, rates,
horizon, options, seed). Ensemble trial seeds are the outputs of a
splitmix64 stream seeded with the base seed, indexed by trial number, so an
ensemble is bit-reproducible regardless of worker count or completion
order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidParameterError
from .rates import ScatteringRates


class State(Enum):
    """Prepared or latent qubit state; the value is the serialized name."""

    DARK = "dark"
    BRIGHT = "bright"

    def flipped(self) -> "State":
        return State.DARK if self is State.BRIGHT else State.BRIGHT


_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    # splitmix64 finalizer
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_seed(base_seed: int, index: int) -> int:
    """The ``index``-th output of a splitmix64 stream seeded with base_seed.

    O(1) in ``index``, so trials can be generated in any order by any
    worker and still see the same seed.
    """
    if index < 0:
        raise InvalidParameterError("index must be >= 0")
    return _mix64((base_seed + (index + 1) * _GOLDEN) & _MASK64)


@dataclass
class TrialRecord:
    """One detection attempt.

    Attributes
    ----------
    prepared : State
        The intended prepared state (the label, even if a preparation error
        flipped the actual initial latent state).
    events : numpy.ndarray
        Sorted detected-event timestamps in [0, horizon], seconds.
    horizon : float
        Simulated window length, seconds.
    transitions : list of (float, State), optional
        Latent trajectory for diagnostics: (0.0, initial state) followed by
        each jump as (time, new state). None when not recorded.
    seed : int
        The RNG seed this trial was generated from.
    """

    prepared: State
    events: np.ndarray
    horizon: float
    transitions: list[tuple[float, State]] | None = None
    seed: int = 0

    def validate(self) -> None:
        """Raise InvalidParameterError on any structural invariant breach."""
        if self.horizon <= 0.0:
            raise InvalidParameterError("horizon must be positive")
        ev = np.asarray(self.events, dtype=float)
        if ev.size:
            if ev[0] < 0.0 or ev[-1] > self.horizon:
                raise InvalidParameterError("events outside [0, horizon]")
            if np.any(np.diff(ev) <= 0.0):
                raise InvalidParameterError("events must be strictly increasing")
        if self.transitions is not None:
            times = [t for t, _ in self.transitions]
            states = [s for _, s in self.transitions]
            if any(b <= a for a, b in zip(times[1:], times[2:])):
                raise InvalidParameterError("transitions must be strictly increasing")
            if any(a is b for a, b in zip(states, states[1:])):
                raise InvalidParameterError("transitions must alternate")

    def count_within(self, tau: float) -> int:
        """Number of events with timestamp <= tau."""
        return int(np.searchsorted(self.events, tau, side="right"))

    def state_at(self, t: float) -> State:
        """Latent state at time t (requires recorded transitions)."""
        if self.transitions is None:
            raise InvalidParameterError("trial recorded without transitions")
        state = self.transitions[0][1]
        for time, new in self.transitions[1:]:
            if time > t:
                break
            state = new
        return state


@dataclass(frozen=True)
class StreamOptions:
    """Detector imperfections applied after exact sampling; all default off.

    dead_time: nonparalyzable detector dead time, s (events closer than
    this to the last accepted event are dropped). time_resolution: tagger
    quantization step, s (timestamps rounded; coincidences collapse).
    prep_error: probability the initial latent state is flipped relative to
    the prepared label.
    """

    dead_time: float = 0.0
    time_resolution: float | None = None
    prep_error: float = 0.0
    record_transitions: bool = True

    def __post_init__(self) -> None:
        if self.dead_time < 0.0:
            raise InvalidParameterError("dead_time must be >= 0")
        if self.time_resolution is not None and self.time_resolution <= 0.0:
            raise InvalidParameterError("time_resolution must be positive")
        if not 0.0 <= self.prep_error <= 1.0:
            raise InvalidParameterError("prep_error must be in [0, 1]")


_DEFAULT_OPTIONS = StreamOptions()


def simulate_trial(prepared: State, rates: ScatteringRates, horizon: float,
                   seed: int, options: StreamOptions = _DEFAULT_OPTIONS) -> TrialRecord:
    """Sample one detection trial exactly.

    Per latent sojourn, the draw order is fixed (sojourn exponential, then
    Poisson event count, then event positions) so that identical inputs give
    identical records on any platform numpy supports.

    Parameters
    ----------
    prepared : State
        Intended initial state.
    rates : ScatteringRates
        Operating-point rates; only detected_signal, rd, rb, rdc are used.
    horizon : float
        Window length in seconds, > 0.
    seed : int
        Trial RNG seed (use ``trial_seed`` to derive from an ensemble seed).
    options : StreamOptions
        Detector imperfections; the default applies none.
    """
    if horizon <= 0.0:
        raise InvalidParameterError("horizon must be positive")
    rng = np.random.default_rng(seed)

    state = prepared
    if options.prep_error > 0.0 and rng.random() < options.prep_error:
        state = state.flipped()

    t = 0.0
    chunks: list[np.ndarray] = []
    transitions: list[tuple[float, State]] | None
    transitions = [(0.0, state)] if options.record_transitions else None

    while True:
        if state is State.BRIGHT:
            leave = rates.rd
            emit = rates.detected_signal + rates.rdc
        else:
            leave = rates.rb
            emit = rates.rdc
        dwell = rng.exponential(1.0 / leave) if leave > 0.0 else math.inf
        end = min(t + dwell, horizon)
        span = end - t
        if emit > 0.0 and span > 0.0:
            n = rng.poisson(emit * span)
            if n:
                chunks.append(t + span * np.sort(rng.random(n)))
        if end >= horizon:
            break
        t = end
        state = state.flipped()
        if transitions is not None:
            transitions.append((t, state))

    events = np.concatenate(chunks) if chunks else np.empty(0)
    if options.dead_time > 0.0 and events.size:
        events = _apply_dead_time(events, options.dead_time)
    if options.time_resolution is not None and events.size:
        res = options.time_resolution
        events = np.unique(np.minimum(np.round(events / res) * res, horizon))
    return TrialRecord(prepared=prepared, events=events, horizon=horizon,
                       transitions=transitions, seed=seed)


def _apply_dead_time(events: np.ndarray, dead: float) -> np.ndarray:
    kept = []
    last = -math.inf
    for e in events:
        if e - last >= dead:
            kept.append(e)
            last = e
    return np.asarray(kept)


def _simulate_block(prepared: State, rates: ScatteringRates, horizon: float,
                    base_seed: int, start: int, stop: int,
                    options: StreamOptions) -> list[TrialRecord]:
    return [
        simulate_trial(prepared, rates, horizon, trial_seed(base_seed, i), options)
        for i in range(start, stop)
    ]


def simulate_ensemble(prepared: State, rates: ScatteringRates, horizon: float,
                      n_trials: int, base_seed: int,
                      options: StreamOptions = _DEFAULT_OPTIONS,
                      threads: int = 1) -> list[TrialRecord]:
    """Sample ``n_trials`` independent trials, ordered by trial index.

    Trial i uses seed ``trial_seed(base_seed, i)``; the result is
    bit-identical for any ``threads`` value. ``threads`` > 1 runs worker
    processes over contiguous index blocks (the per-trial loop is
    Python-bound, so thread-level parallelism would not help).
    """
    if n_trials < 1:
        raise InvalidParameterError("n_trials must be >= 1")
    if threads < 1:
        raise InvalidParameterError("threads must be >= 1")
    if threads == 1 or n_trials < 4 * threads:
        return _simulate_block(prepared, rates, horizon, base_seed, 0, n_trials, options)

    bounds = np.linspace(0, n_trials, threads + 1).astype(int)
    records: list[TrialRecord] = []
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(_simulate_block, prepared, rates, horizon, base_seed,
                        int(a), int(b), options)
            for a, b in zip(bounds[:-1], bounds[1:])
        ]
        for fut in futures:  # submission order = index order
            records.extend(fut.result())
    return records
