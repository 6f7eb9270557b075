"""Run configuration: defaults, YAML loading, canonical serialization.

Config files are YAML mappings mirroring ``DEFAULTS`` below. Frequencies are
given divided by 2*pi in the unit named by the key suffix (``gamma_mhz: 19.6``
means Gamma = 2*pi * 19.6 MHz in rad/s); times are plain seconds. Every key
has a default matching the reference setup, so an empty file (or no file) is
a valid configuration.

The loaded mapping, with defaults filled in, is kept verbatim as the
canonical form: re-serializing a loaded config reproduces it exactly, and
the config hash embedded in output files is the SHA-256 of its sorted JSON.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import yaml

from .dynamics import optimal_cutoff
from .errors import ConfigError
from .protocols import Mode, ProtocolParams
from .rates import (TWO_PI_GHZ, TWO_PI_MHZ, RateModel, ScatteringRates,
                    saturation_intensity)
from .stream import StreamOptions

DEFAULTS: dict = {
    "model": {
        "gamma_mhz": 19.6,
        "delta_hfp_ghz": 2.1,
        "delta_hfs_ghz": 12.6,
        "zeeman_mhz": 4.8,
        "detuning_mhz": 0.0,
        "epsilon": 0.022,
        "i_sat_mw_cm2": None,  # null -> two-level value from gamma
        "beam_waist_um": 41.0,
        "dark_count_hz": 6.5,
        "background_per_uw_hz": 35.0,
    },
    "intensities_mw_cm2": [8.0, 29.0, 36.0],
    "protocol": {
        "mode": "first-two-photon",
        "tau_max_s": 5.0e-5,
        "tau_c_s": None,  # null -> ln(rd/rdc)/detected_signal per intensity
        "threshold": 2,
    },
    "sweep": {
        "tau_start_s": 2.0e-6,
        "tau_stop_s": 2.5e-4,
        "tau_step_s": 2.0e-6,
        "include_tau_c": True,
    },
    "optimize": {
        "tau_lo_s": 2.0e-5,
        "tau_hi_s": 2.5e-4,
        "tau_step_s": 1.0e-6,
    },
    "simulate": {
        "n_per_state": 1000,
        "horizon_s": None,  # null -> protocol tau_max
        "dead_time_s": 0.0,
        "time_resolution_s": None,
        "prep_error": 0.0,
    },
    "seed": 42,
    "threads": 1,
    "ci_level": 0.6827,
}


def _merge(defaults: dict, user: dict, path: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, value in user.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key: {where}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be a mapping")
            out[key] = _merge(defaults[key], value, where)
        else:
            out[key] = value
    return out


def _number(mapping: dict, section: str, key: str, *, allow_none: bool = False):
    value = mapping[section][key] if section else mapping[key]
    where = f"{section}.{key}" if section else key
    if value is None:
        if allow_none:
            return None
        raise ConfigError(f"{where} must be a number")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    return float(value)


@dataclass
class RunConfig:
    """Validated configuration with SI-converted fields.

    ``mapping`` is the canonical (defaults-filled) form used for hashing and
    round-trip serialization; the remaining fields are derived from it.
    """

    model: RateModel
    intensities: tuple[float, ...]
    mode: Mode
    tau_max: float
    tau_c: float | None
    threshold: int
    sweep_start: float
    sweep_stop: float
    sweep_step: float
    include_tau_c: bool
    opt_lo: float
    opt_hi: float
    opt_step: float
    n_per_state: int
    horizon: float | None
    options: StreamOptions
    seed: int
    threads: int
    ci_level: float
    mapping: dict = field(repr=False, default_factory=dict)

    @property
    def config_hash(self) -> str:
        # worker count never changes results, so it stays out of the hash
        semantic = {k: v for k, v in self.mapping.items() if k != "threads"}
        digest = hashlib.sha256(
            json.dumps(semantic, sort_keys=True).encode()).hexdigest()
        return digest[:12]

    def resolved_tau_c(self, rates: ScatteringRates) -> float:
        """Configured tau_c, or the one-photon cutoff for these rates."""
        if self.tau_c is not None:
            return self.tau_c
        if rates.detected_signal <= 0.0 or rates.rd <= 0.0 or rates.rdc <= 0.0:
            return 0.0
        return optimal_cutoff(rates.rd, rates.rdc, rates.detected_signal)

    def protocol_params(self, rates: ScatteringRates) -> ProtocolParams:
        tau_c = min(self.resolved_tau_c(rates), self.tau_max)
        return ProtocolParams(mode=self.mode, tau_max=self.tau_max,
                              tau_c=tau_c, threshold=self.threshold)

    def sweep_grid(self, tau_c: float | None = None):
        """The sweep tau grid, optionally with tau_c spliced in."""
        grid = np.arange(self.sweep_start, self.sweep_stop + 0.5 * self.sweep_step,
                         self.sweep_step)
        if self.include_tau_c and tau_c is not None and 0.0 < tau_c < grid[-1]:
            grid = np.union1d(grid, [tau_c])
        return grid

    def dumps(self) -> str:
        return yaml.safe_dump(self.mapping, sort_keys=True)


def from_mapping(user: dict | None) -> RunConfig:
    """Build a RunConfig from a (possibly partial) plain mapping."""
    if user is None:
        user = {}
    if not isinstance(user, dict):
        raise ConfigError("config root must be a mapping")
    m = _merge(DEFAULTS, user)

    gamma = _number(m, "model", "gamma_mhz") * TWO_PI_MHZ
    i_sat = _number(m, "model", "i_sat_mw_cm2", allow_none=True)
    try:
        model = RateModel(
            gamma=gamma,
            delta_hfp=_number(m, "model", "delta_hfp_ghz") * TWO_PI_GHZ,
            delta_hfs=_number(m, "model", "delta_hfs_ghz") * TWO_PI_GHZ,
            zeeman=_number(m, "model", "zeeman_mhz") * TWO_PI_MHZ,
            detuning=_number(m, "model", "detuning_mhz") * TWO_PI_MHZ,
            epsilon=_number(m, "model", "epsilon"),
            i_sat=saturation_intensity(gamma) if i_sat is None else i_sat,
            beam_waist=_number(m, "model", "beam_waist_um"),
            dark_count=_number(m, "model", "dark_count_hz"),
            background_per_uw=_number(m, "model", "background_per_uw_hz"),
        )
    except Exception as exc:
        raise ConfigError(f"invalid model section: {exc}") from exc

    raw_intensities = m["intensities_mw_cm2"]
    if not isinstance(raw_intensities, (list, tuple)) or not raw_intensities:
        raise ConfigError("intensities_mw_cm2 must be a nonempty list")
    intensities = tuple(float(i) for i in raw_intensities)
    if any(i < 0.0 for i in intensities):
        raise ConfigError("intensities must be >= 0")

    mode_name = m["protocol"]["mode"]
    try:
        mode = Mode(mode_name)
    except ValueError:
        valid = ", ".join(mm.value for mm in Mode)
        raise ConfigError(f"protocol.mode must be one of: {valid}") from None

    tau_max = _number(m, "protocol", "tau_max_s")
    tau_c = _number(m, "protocol", "tau_c_s", allow_none=True)
    threshold = m["protocol"]["threshold"]
    if not isinstance(threshold, int) or threshold < 1:
        raise ConfigError("protocol.threshold must be an integer >= 1")
    if tau_max <= 0.0:
        raise ConfigError("protocol.tau_max_s must be positive")
    if tau_c is not None and tau_c < 0.0:
        raise ConfigError("protocol.tau_c_s must be >= 0")

    sweep_start = _number(m, "sweep", "tau_start_s")
    sweep_stop = _number(m, "sweep", "tau_stop_s")
    sweep_step = _number(m, "sweep", "tau_step_s")
    if not 0.0 < sweep_start < sweep_stop or sweep_step <= 0.0:
        raise ConfigError("sweep grid must satisfy 0 < start < stop, step > 0")

    opt_lo = _number(m, "optimize", "tau_lo_s")
    opt_hi = _number(m, "optimize", "tau_hi_s")
    opt_step = _number(m, "optimize", "tau_step_s")
    if not 0.0 < opt_lo < opt_hi or opt_step <= 0.0:
        raise ConfigError("optimize range must satisfy 0 < lo < hi, step > 0")

    n_per_state = m["simulate"]["n_per_state"]
    if not isinstance(n_per_state, int) or n_per_state < 1:
        raise ConfigError("simulate.n_per_state must be an integer >= 1")
    horizon = _number(m, "simulate", "horizon_s", allow_none=True)
    if horizon is not None and horizon <= 0.0:
        raise ConfigError("simulate.horizon_s must be positive")
    try:
        options = StreamOptions(
            dead_time=_number(m, "simulate", "dead_time_s"),
            time_resolution=_number(m, "simulate", "time_resolution_s",
                                    allow_none=True),
            prep_error=_number(m, "simulate", "prep_error"),
        )
    except Exception as exc:
        raise ConfigError(f"invalid simulate section: {exc}") from exc

    seed = m["seed"]
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    threads = m["threads"]
    if not isinstance(threads, int) or threads < 1:
        raise ConfigError("threads must be an integer >= 1")
    ci_level = _number(m, "", "ci_level")
    if not 0.0 < ci_level < 1.0:
        raise ConfigError("ci_level must be in (0, 1)")

    return RunConfig(model=model, intensities=intensities, mode=mode,
                     tau_max=tau_max, tau_c=tau_c, threshold=threshold,
                     sweep_start=sweep_start, sweep_stop=sweep_stop,
                     sweep_step=sweep_step,
                     include_tau_c=bool(m["sweep"]["include_tau_c"]),
                     opt_lo=opt_lo, opt_hi=opt_hi, opt_step=opt_step,
                     n_per_state=n_per_state, horizon=horizon, options=options,
                     seed=seed, threads=threads, ci_level=ci_level, mapping=m)


def updated(cfg: RunConfig, overrides: dict) -> RunConfig:
    """A new RunConfig with ``overrides`` merged into the canonical mapping."""
    return from_mapping(_merge(cfg.mapping, overrides))


def load_config(path: str | None) -> RunConfig:
    """Load a YAML config file; None or a missing-file path is an error."""
    if path is None:
        return from_mapping({})
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    return from_mapping(data)
