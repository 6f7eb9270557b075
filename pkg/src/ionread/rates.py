"""Operational rates for fluorescence state detection.

Converts beam settings (intensity, detuning) into the five rates that drive
everything downstream: the bright-state scattering rate, its detected
fraction, the two off-resonant pumping rates between the qubit manifolds,
and the background event rate.

Conventions: angular frequencies in rad/s, event rates in 1/s, intensity in
mW/cm^2, beam waist in um, beam power in uW. The odd units on intensity and
power follow common lab usage and keep the numbers near unity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants

from .errors import InvalidParameterError

# Detection transition of the Yb+ hyperfine qubit.
WAVELENGTH = 369.5e-9  # m

# rad/s per MHz / GHz of ordinary frequency; config files quote frequencies
# divided by 2*pi, and sharing these factors keeps a converted value
# bit-identical to the defaults below.
TWO_PI_MHZ = 2.0 * math.pi * 1e6
TWO_PI_GHZ = 2.0 * math.pi * 1e9

DEFAULT_GAMMA = 19.6 * TWO_PI_MHZ  # P1/2 linewidth, rad/s
DEFAULT_DELTA_HFP = 2.1 * TWO_PI_GHZ  # P-level hyperfine splitting, rad/s
DEFAULT_DELTA_HFS = 12.6 * TWO_PI_GHZ  # S-level hyperfine splitting, rad/s
DEFAULT_ZEEMAN = 4.8 * TWO_PI_MHZ  # ground-state Zeeman splitting, rad/s
DEFAULT_EPSILON = 0.022  # net photon detection efficiency
DEFAULT_BEAM_WAIST = 41.0  # um
DEFAULT_DARK_COUNT = 6.5  # Hz, detector floor
DEFAULT_BACKGROUND_PER_UW = 35.0  # Hz per uW of beam power


def saturation_intensity(gamma: float = DEFAULT_GAMMA,
                         wavelength: float = WAVELENGTH) -> float:
    """Two-level saturation intensity pi*h*c*Gamma/(3*lambda^3) in mW/cm^2.

    Parameters
    ----------
    gamma : float
        Transition linewidth in rad/s.
    wavelength : float
        Transition wavelength in m.
    """
    if gamma <= 0.0 or wavelength <= 0.0:
        raise InvalidParameterError("gamma and wavelength must be positive")
    i_si = math.pi * constants.h * constants.c * gamma / (3.0 * wavelength**3)
    return i_si * 0.1  # W/m^2 -> mW/cm^2


@dataclass(frozen=True)
class RateModel:
    """Physical constants and beam geometry for one detection setup.

    All angular frequencies in rad/s. ``zeeman`` is recorded for reference
    only: the scattering-rate formula used here already assumes the Zeeman
    splitting destabilizes the dark superposition optimally, so it does not
    appear in any rate expression.

    Attributes
    ----------
    gamma : float
        Excited-state linewidth, rad/s.
    delta_hfp : float
        Hyperfine splitting of the excited P level, rad/s.
    delta_hfs : float
        Hyperfine splitting of the ground S level, rad/s.
    zeeman : float
        Ground-state Zeeman splitting, rad/s (documentation only).
    detuning : float
        Detection-beam detuning from the cycling transition, rad/s.
    epsilon : float
        Overall photon detection efficiency, in (0, 1].
    i_sat : float
        Saturation intensity, mW/cm^2.
    beam_waist : float
        Detection-beam waist, um.
    dark_count : float
        Detector dark-count rate, Hz.
    background_per_uw : float
        Beam-induced background per unit beam power, Hz/uW.
    """

    gamma: float = DEFAULT_GAMMA
    delta_hfp: float = DEFAULT_DELTA_HFP
    delta_hfs: float = DEFAULT_DELTA_HFS
    zeeman: float = DEFAULT_ZEEMAN
    detuning: float = 0.0
    epsilon: float = DEFAULT_EPSILON
    i_sat: float = saturation_intensity()
    beam_waist: float = DEFAULT_BEAM_WAIST
    dark_count: float = DEFAULT_DARK_COUNT
    background_per_uw: float = DEFAULT_BACKGROUND_PER_UW

    def __post_init__(self) -> None:
        if self.gamma <= 0.0:
            raise InvalidParameterError("gamma must be positive")
        if self.delta_hfp <= 0.0 or self.delta_hfs <= 0.0:
            raise InvalidParameterError("hyperfine splittings must be positive")
        if not 0.0 < self.epsilon <= 1.0:
            raise InvalidParameterError("epsilon must be in (0, 1]")
        if self.i_sat <= 0.0:
            raise InvalidParameterError("i_sat must be positive")
        if self.beam_waist <= 0.0:
            raise InvalidParameterError("beam_waist must be positive")
        if self.dark_count < 0.0 or self.background_per_uw < 0.0:
            raise InvalidParameterError("background coefficients must be >= 0")


@dataclass(frozen=True)
class ScatteringRates:
    """Derived rates for one operating point, all in 1/s.

    Attributes
    ----------
    s0 : float
        On-resonance saturation parameter I/I_sat.
    r0 : float
        Bright-state photon scattering rate.
    detected_signal : float
        Detected bright-state rate, epsilon * r0.
    rd : float
        Bright-to-dark off-resonant pumping rate.
    rb : float
        Dark-to-bright off-resonant pumping rate.
    rdc : float
        Background event rate (dark counts plus beam scatter).
    """

    s0: float = 0.0
    r0: float = 0.0
    detected_signal: float = 0.0
    rd: float = 0.0
    rb: float = 0.0
    rdc: float = 0.0

    def __post_init__(self) -> None:
        for name in ("s0", "r0", "detected_signal", "rd", "rb", "rdc"):
            if getattr(self, name) < 0.0:
                raise InvalidParameterError(f"{name} must be >= 0")


def saturation_from_intensity(intensity: float, i_sat: float) -> float:
    """Saturation parameter s0 = I/I_sat for intensities in mW/cm^2."""
    if i_sat <= 0.0:
        raise InvalidParameterError("i_sat must be positive")
    if intensity < 0.0:
        raise InvalidParameterError("intensity must be >= 0")
    return intensity / i_sat


def bright_scattering_rate(s0: float, detuning: float, gamma: float) -> float:
    """Photon scattering rate of the bright state, 1/s.

    r0 = (Gamma/6) * s0 / (1 + (2/3) s0 + (2 Delta/Gamma)^2), the cycling
    transition's rate with the three-fold ground degeneracy folded in.
    Saturates at Gamma/4 as s0 -> inf on resonance.
    """
    if s0 < 0.0:
        raise InvalidParameterError("s0 must be >= 0")
    if gamma <= 0.0:
        raise InvalidParameterError("gamma must be positive")
    return (gamma / 6.0) * s0 / (1.0 + (2.0 / 3.0) * s0 + (2.0 * detuning / gamma) ** 2)


def dark_pumping_rate(s0: float, gamma: float, delta_hfp: float) -> float:
    """Off-resonant pumping rate out of the bright manifold, 1/s.

    rd = (2/3)(1/3)(Gamma/2) s0 (Gamma/(2 Delta_HFP))^2: excitation of the
    far-detuned excited hyperfine level followed by decay to the dark state.
    Linear in s0.
    """
    if s0 < 0.0:
        raise InvalidParameterError("s0 must be >= 0")
    if gamma <= 0.0 or delta_hfp <= 0.0:
        raise InvalidParameterError("gamma and delta_hfp must be positive")
    return (2.0 / 3.0) * (1.0 / 3.0) * (gamma / 2.0) * s0 * (gamma / (2.0 * delta_hfp)) ** 2


def bright_pumping_rate(s0: float, gamma: float, delta_hfp: float,
                        delta_hfs: float) -> float:
    """Off-resonant pumping rate out of the dark state, 1/s.

    rb = (2/3)(Gamma/2) s0 (Gamma/(2(Delta_HFP + Delta_HFS)))^2. The larger
    detuning makes this the slowest process in the model. Linear in s0.
    """
    if s0 < 0.0:
        raise InvalidParameterError("s0 must be >= 0")
    if gamma <= 0.0 or delta_hfp <= 0.0 or delta_hfs <= 0.0:
        raise InvalidParameterError("splittings must be positive")
    return (2.0 / 3.0) * (gamma / 2.0) * s0 * (gamma / (2.0 * (delta_hfp + delta_hfs))) ** 2


def power_from_intensity(intensity: float, waist: float) -> float:
    """Gaussian-beam power (uW) from peak intensity (mW/cm^2) and waist (um).

    P = I * pi w^2 / 2. The 5e-6 folds the cm^2/um^2 and mW/uW conversions.
    """
    if intensity < 0.0:
        raise InvalidParameterError("intensity must be >= 0")
    if waist <= 0.0:
        raise InvalidParameterError("waist must be positive")
    return intensity * math.pi * waist**2 * 5e-6


def background_rate(power: float, dark_count: float,
                    background_per_uw: float) -> float:
    """Total background event rate (1/s): detector floor plus beam scatter.

    ``power`` in uW; the beam term is linear in power.
    """
    if power < 0.0:
        raise InvalidParameterError("power must be >= 0")
    return dark_count + background_per_uw * power


def rates_for_operating_point(model: RateModel, intensity: float) -> ScatteringRates:
    """Evaluate all operational rates for one beam intensity (mW/cm^2)."""
    s0 = saturation_from_intensity(intensity, model.i_sat)
    r0 = bright_scattering_rate(s0, model.detuning, model.gamma)
    power = power_from_intensity(intensity, model.beam_waist)
    return ScatteringRates(
        s0=s0,
        r0=r0,
        detected_signal=model.epsilon * r0,
        rd=dark_pumping_rate(s0, model.gamma, model.delta_hfp),
        rb=bright_pumping_rate(s0, model.gamma, model.delta_hfp, model.delta_hfs),
        rdc=background_rate(power, model.dark_count, model.background_per_uw),
    )
