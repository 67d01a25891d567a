"""Optical downlink budget: gains, losses, received power, SNR and Shannon capacity.

All quantities are in dB / dBW. There is no standard closed form for cloud
attenuation or turbulence loss at this level of detail, so both follow simple
rules that can be switched off:

* cloud: at or above the threshold the link is blocked (capacity 0); below it
  a linear penalty ``k_cloud * fraction`` dB grades thin cover.
* turbulence: ``max(0, k_turb * log10(Cn2 / Cn2_ref))`` dB.

``zenith_attenuation`` is the total zenith-path atmospheric loss in dB and is
scaled by the cosecant of elevation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .orbit import EARTH_RADIUS

BOLTZMANN_DB = 10.0 * math.log10(1.380649e-23)  # dBW/K/Hz
DB_PER_NEPER_SQ = 10.0 / math.log(10.0)

DEFAULT_K_CLOUD = 10.0  # dB at full cover
DEFAULT_CN2_REF = 1e-17  # m^-2/3
DEFAULT_K_TURB = 3.0  # dB per decade
DEFAULT_CLOUD_THRESHOLD = 0.1


@dataclass(frozen=True)
class TerminalSpec:
    tx_power: float  # dBW
    wavelength: float  # m
    tx_aperture: float  # m
    rx_aperture: float  # m
    efficiency: float = 1.0
    beam_divergence: float = 15e-6  # rad
    pointing_error: float = 0.0  # rad

    def __post_init__(self):
        if not (self.wavelength > 0 and self.tx_aperture > 0 and self.rx_aperture > 0):
            raise DomainError("wavelength and apertures must be positive")
        if not 0 < self.efficiency <= 1:
            raise DomainError(f"efficiency {self.efficiency} outside (0, 1]")
        if not self.beam_divergence > 0 or self.pointing_error < 0:
            raise DomainError("beam divergence must be positive and pointing error non-negative")


@dataclass(frozen=True)
class NoiseSpec:
    system_temperature: float  # K
    bandwidth: float  # Hz
    boltzmann_db: float = BOLTZMANN_DB

    def __post_init__(self):
        if not (self.system_temperature > 0 and self.bandwidth > 0):
            raise DomainError("noise temperature and bandwidth must be positive")

    @property
    def noise_floor_dbw(self) -> float:
        return (self.boltzmann_db + 10.0 * math.log10(self.system_temperature)
                + 10.0 * math.log10(self.bandwidth))


@dataclass(frozen=True)
class LinkEnvironment:
    zenith_attenuation: float = 0.0  # dB
    cloud_fraction: float = 0.0
    turbulence: float | None = None  # C_n^2, None means no turbulence penalty
    link_margin: float = 0.0  # dB
    cloud_threshold: float = DEFAULT_CLOUD_THRESHOLD
    k_cloud: float = DEFAULT_K_CLOUD
    turbulence_ref: float = DEFAULT_CN2_REF
    k_turb: float = DEFAULT_K_TURB

    def __post_init__(self):
        if self.zenith_attenuation < 0 or self.link_margin < 0:
            raise DomainError("attenuation and margin must be non-negative")
        if not 0 <= self.cloud_fraction <= 1:
            raise DomainError(f"cloud fraction {self.cloud_fraction} outside [0, 1]")


@dataclass(frozen=True)
class LinkResult:
    fspl: float
    gain_tx: float
    gain_rx: float
    pointing_loss: float
    atmospheric_loss: float
    cloud_loss: float | None  # None: blocked by cloud
    turbulence_loss: float
    link_margin: float
    received_power: float | None  # dBW; None when blocked
    snr_db: float | None
    capacity: float  # bit/s

    @property
    def available(self) -> bool:
        return self.cloud_loss is not None


def free_space_path_loss(slant_range: float, wavelength: float) -> float:
    if not (slant_range > 0 and wavelength > 0):
        raise DomainError("slant range and wavelength must be positive")
    return 20.0 * math.log10(4.0 * math.pi * slant_range / wavelength)


def antenna_gain(diameter: float, wavelength: float, efficiency: float) -> float:
    if not (diameter > 0 and wavelength > 0 and 0 < efficiency <= 1):
        raise DomainError("aperture, wavelength and efficiency must be positive (efficiency <= 1)")
    return 10.0 * math.log10(efficiency * (math.pi * diameter / wavelength) ** 2)


def pointing_loss(pointing_error: float, beam_divergence: float) -> float:
    if not beam_divergence > 0 or pointing_error < 0:
        raise DomainError("beam divergence must be positive and pointing error non-negative")
    return (2.0 * pointing_error / beam_divergence) ** 2 * DB_PER_NEPER_SQ


def atmospheric_loss(zenith_attenuation: float, elevation: float) -> float:
    """Cosecant scaling of the zenith attenuation; elevation in degrees."""
    if not 0 < elevation <= 90:
        raise DomainError(f"elevation {elevation} outside (0, 90]")
    if zenith_attenuation < 0:
        raise DomainError("zenith attenuation must be non-negative")
    return zenith_attenuation / math.sin(math.radians(elevation))


def cloud_loss(cloud_fraction: float, threshold: float = DEFAULT_CLOUD_THRESHOLD,
               k_cloud: float = DEFAULT_K_CLOUD) -> float | None:
    """dB penalty for sub-threshold cover, or None when cover blocks the link."""
    if cloud_fraction >= threshold:
        return None
    return k_cloud * cloud_fraction


def turbulence_loss(cn2: float, reference: float = DEFAULT_CN2_REF, k_turb: float = DEFAULT_K_TURB) -> float:
    if not (cn2 > 0 and reference > 0):
        raise DomainError("C_n^2 and its reference must be positive")
    return max(0.0, k_turb * math.log10(cn2 / reference))


def shannon_capacity(snr_db: float, bandwidth: float) -> float:
    return bandwidth * math.log2(1.0 + 10.0 ** (snr_db / 10.0))


def link_budget(terminal: TerminalSpec, noise: NoiseSpec, env: LinkEnvironment, geometry) -> LinkResult:
    """Evaluate the budget for one geometry (anything with .elevation and .slant_range)."""
    fs = free_space_path_loss(geometry.slant_range, terminal.wavelength)
    g_tx = antenna_gain(terminal.tx_aperture, terminal.wavelength, terminal.efficiency)
    g_rx = antenna_gain(terminal.rx_aperture, terminal.wavelength, terminal.efficiency)
    lp = pointing_loss(terminal.pointing_error, terminal.beam_divergence)
    la = atmospheric_loss(env.zenith_attenuation, geometry.elevation)
    lc = cloud_loss(env.cloud_fraction, env.cloud_threshold, env.k_cloud)
    lt = 0.0 if env.turbulence is None else turbulence_loss(env.turbulence, env.turbulence_ref, env.k_turb)
    if lc is None:
        return LinkResult(fs, g_tx, g_rx, lp, la, None, lt, env.link_margin, None, None, 0.0)
    other = lp + la + lc + lt + env.link_margin
    p_rx = terminal.tx_power + g_tx + g_rx - fs - other
    snr = p_rx - noise.noise_floor_dbw
    return LinkResult(fs, g_tx, g_rx, lp, la, lc, lt, env.link_margin, p_rx, snr,
                      shannon_capacity(snr, noise.bandwidth))


def capacity_array(terminal: TerminalSpec, noise: NoiseSpec, env: LinkEnvironment,
                   elevation, slant_range, cloud_fraction) -> np.ndarray:
    """Vectorised capacity (bit/s) over samples; blocked samples give 0.

    Same budget as :func:`link_budget`, arranged for numpy arrays.
    """
    elevation = np.asarray(elevation, float)
    slant_range = np.asarray(slant_range, float)
    cloud = np.broadcast_to(np.asarray(cloud_fraction, float), elevation.shape)
    if np.any(elevation <= 0) or np.any(elevation > 90) or np.any(slant_range <= 0):
        raise DomainError("elevation must lie in (0, 90] and slant range be positive")
    fixed = (terminal.tx_power
             + antenna_gain(terminal.tx_aperture, terminal.wavelength, terminal.efficiency)
             + antenna_gain(terminal.rx_aperture, terminal.wavelength, terminal.efficiency)
             - pointing_loss(terminal.pointing_error, terminal.beam_divergence)
             - env.link_margin
             - (0.0 if env.turbulence is None
                else turbulence_loss(env.turbulence, env.turbulence_ref, env.k_turb))
             - noise.noise_floor_dbw)
    fs = 20.0 * np.log10(4.0 * np.pi * slant_range / terminal.wavelength)
    la = env.zenith_attenuation / np.sin(np.radians(elevation))
    snr = fixed - fs - la - env.k_cloud * cloud
    cap = noise.bandwidth * np.log2(1.0 + 10.0 ** (snr / 10.0))
    return np.where(cloud >= env.cloud_threshold, 0.0, cap)


def slant_range_for_elevation(elevation: float, altitude: float, earth_radius: float = EARTH_RADIUS) -> float:
    """Slant range (m) to a satellite at `altitude` seen at `elevation` degrees over a spherical Earth."""
    e = math.radians(elevation)
    r = earth_radius + altitude
    return math.sqrt(r * r - (earth_radius * math.cos(e)) ** 2) - earth_radius * math.sin(e)
