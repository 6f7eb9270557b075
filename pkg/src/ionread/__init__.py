"""Simulation and analysis of fluorescence state detection for hyperfine qubits.

The package models a two-state qubit (bright/dark) read out by resonant
fluorescence: scattering and off-resonant pumping rates from beam settings,
exact sampling of detected-photon streams, early-stopping decision
protocols, rate recovery from count curves, and fidelity-versus-time
characterization of full detection experiments.
"""

from .config import RunConfig, from_mapping, load_config, updated
from .dynamics import (PopulationState, bright_population, expected_counts,
                       one_photon_likelihoods, optimal_cutoff)
from .errors import (ConfigError, DataFormatError, DegenerateDataError,
                     FitFailureError, InsufficientDataError,
                     InvalidParameterError, IonreadError)
from .estimation import (DecayCurve, RateFit, curve_from_records,
                         fit_decay_curve, fit_rate_vs_power)
from .experiment import (FidelityPoint, SweepResult, confidence_interval,
                         error_vs_time_curve, optimize_tau_max,
                         run_detection_experiment)
from .protocols import (DetectionOutcome, Mode, ProtocolParams, decide,
                        decide_first_photon, decide_first_two_photon,
                        decide_threshold)
from .rates import (RateModel, ScatteringRates, background_rate,
                    bright_pumping_rate, bright_scattering_rate,
                    dark_pumping_rate, power_from_intensity,
                    rates_for_operating_point, saturation_from_intensity,
                    saturation_intensity)
from .stream import (State, StreamOptions, TrialRecord, simulate_ensemble,
                     simulate_trial, trial_seed)
from .tables import (read_curve_csv, write_curve_csv, write_events_csv,
                     write_json, write_outcomes_csv, write_rates_csv,
                     write_sweep_csv, write_trials_csv)

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "from_mapping", "load_config", "updated",
    "PopulationState", "bright_population", "expected_counts",
    "one_photon_likelihoods", "optimal_cutoff",
    "IonreadError", "ConfigError", "InvalidParameterError",
    "InsufficientDataError", "DegenerateDataError", "DataFormatError",
    "FitFailureError",
    "DecayCurve", "RateFit", "curve_from_records", "fit_decay_curve",
    "fit_rate_vs_power",
    "FidelityPoint", "SweepResult", "confidence_interval",
    "error_vs_time_curve", "optimize_tau_max", "run_detection_experiment",
    "DetectionOutcome", "Mode", "ProtocolParams", "decide",
    "decide_first_photon", "decide_first_two_photon", "decide_threshold",
    "RateModel", "ScatteringRates", "background_rate", "bright_pumping_rate",
    "bright_scattering_rate", "dark_pumping_rate", "power_from_intensity",
    "rates_for_operating_point", "saturation_from_intensity",
    "saturation_intensity",
    "State", "StreamOptions", "TrialRecord", "simulate_ensemble",
    "simulate_trial", "trial_seed",
    "read_curve_csv", "write_curve_csv", "write_events_csv", "write_json",
    "write_outcomes_csv", "write_rates_csv", "write_sweep_csv",
    "write_trials_csv",
]
