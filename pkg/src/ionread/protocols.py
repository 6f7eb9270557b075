"""Decision rules mapping an event record to a bright/dark verdict.

Three protocols: fixed-threshold counting over the full window, first-photon
(any detection means bright), and the adaptive first-two-photon rule: a
first photon before the cutoff tau_c decides bright immediately; a later
first photon needs a second photon inside the window to confirm. Dark
verdicts always wait out the full window.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InsufficientDataError, InvalidParameterError
from .stream import State, TrialRecord


class Mode(Enum):
    THRESHOLD = "threshold"
    FIRST_PHOTON = "first-photon"
    FIRST_TWO_PHOTON = "first-two-photon"


@dataclass(frozen=True)
class ProtocolParams:
    """Decision-rule configuration.

    tau_max is the maximum detection window (s). tau_c (s) only matters in
    first-two-photon mode; threshold (counts) only in threshold mode.
    """

    mode: Mode
    tau_max: float
    tau_c: float = 0.0
    threshold: int = 2

    def __post_init__(self) -> None:
        if self.tau_max <= 0.0:
            raise InvalidParameterError("tau_max must be positive")
        if not 0.0 <= self.tau_c <= self.tau_max:
            raise InvalidParameterError("tau_c must be in [0, tau_max]")
        if self.mode is Mode.THRESHOLD and self.threshold < 1:
            raise InvalidParameterError("threshold must be >= 1")


@dataclass(frozen=True)
class DetectionOutcome:
    """Verdict plus the time it became available and the events examined."""

    verdict: State
    decision_time: float
    photons_used: int


def _check(record: TrialRecord, params: ProtocolParams, mode: Mode) -> None:
    if params.mode is not mode:
        raise InvalidParameterError(f"params.mode is {params.mode}, expected {mode}")
    if record.horizon < params.tau_max:
        raise InsufficientDataError(
            f"record horizon {record.horizon} shorter than tau_max {params.tau_max}")


def decide_threshold(record: TrialRecord, params: ProtocolParams) -> DetectionOutcome:
    """Bright iff at least ``threshold`` events by tau_max; decides at tau_max."""
    _check(record, params, Mode.THRESHOLD)
    n = record.count_within(params.tau_max)
    verdict = State.BRIGHT if n >= params.threshold else State.DARK
    return DetectionOutcome(verdict, params.tau_max, n)


def decide_first_photon(record: TrialRecord, params: ProtocolParams) -> DetectionOutcome:
    """Bright at the first event inside the window, else dark at tau_max."""
    _check(record, params, Mode.FIRST_PHOTON)
    n = record.count_within(params.tau_max)
    if n >= 1:
        return DetectionOutcome(State.BRIGHT, float(record.events[0]), 1)
    return DetectionOutcome(State.DARK, params.tau_max, 0)


def decide_first_two_photon(record: TrialRecord, params: ProtocolParams) -> DetectionOutcome:
    """Adaptive two-photon rule.

    First event strictly before tau_c -> bright there. Otherwise a second
    event inside the window -> bright at that event. Otherwise dark at
    tau_max, having examined whatever arrived (0 or 1 events).
    """
    _check(record, params, Mode.FIRST_TWO_PHOTON)
    n = record.count_within(params.tau_max)
    if n >= 1 and record.events[0] < params.tau_c:
        return DetectionOutcome(State.BRIGHT, float(record.events[0]), 1)
    if n >= 2:
        return DetectionOutcome(State.BRIGHT, float(record.events[1]), 2)
    return DetectionOutcome(State.DARK, params.tau_max, min(n, 1))


_DECIDERS = {
    Mode.THRESHOLD: decide_threshold,
    Mode.FIRST_PHOTON: decide_first_photon,
    Mode.FIRST_TWO_PHOTON: decide_first_two_photon,
}


def decide(record: TrialRecord, params: ProtocolParams) -> DetectionOutcome:
    """Dispatch to the decider for params.mode."""
    return _DECIDERS[params.mode](record, params)
