"""Radio abstraction: log-distance pathloss, link budget, coverage, capacity.

All functions are pure; the knobs live in :class:`RadioParams`. Capacity uses
a Shannon bound scaled by an implementation-efficiency factor and the TDD
split, which are the two calibration knobs of the bundled scenarios.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import TooClose

SPEED_OF_LIGHT = 299_792_458.0

VALID_SCS_HZ = (15e3, 30e3, 60e3)


@dataclass(frozen=True)
class RadioParams:
    pathloss_exponent: float = 2.2
    reference_distance_m: float = 1.0
    noise_figure_db: float = 7.0
    thermal_noise_dbm_hz: float = -174.0
    coverage_rsrp_threshold_dbm: float = -100.0
    efficiency: float = 0.55
    tdd_dl_fraction: float = 0.7

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"RadioParams.{name} must be finite, got {v!r}")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must be in (0, 1]")
        if not 0.0 < self.tdd_dl_fraction <= 1.0:
            raise ValueError("tdd_dl_fraction must be in (0, 1]")

    def overridden(self, **kwargs) -> "RadioParams":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class LinkBudget:
    pathloss_db: float
    rx_power_dbm: float
    noise_power_dbm: float
    snr_db: float


def path_loss_db(center_frequency_hz: float, distance_m: float,
                 params: RadioParams) -> float:
    """Log-distance pathloss: free-space loss at d0, exponent n beyond it."""
    d0 = params.reference_distance_m
    if distance_m < d0:
        raise TooClose(f"distance {distance_m} m below reference {d0} m")
    free_space_d0 = 20.0 * math.log10(
        4.0 * math.pi * d0 * center_frequency_hz / SPEED_OF_LIGHT)
    return free_space_d0 + 10.0 * params.pathloss_exponent * math.log10(distance_m / d0)


def noise_power_dbm(bandwidth_hz: float, params: RadioParams) -> float:
    return (params.thermal_noise_dbm_hz
            + 10.0 * math.log10(bandwidth_hz)
            + params.noise_figure_db)


def rx_power_dbm(tx_power_dbm: float, center_frequency_hz: float,
                 distance_m: float, params: RadioParams) -> float:
    return tx_power_dbm - path_loss_db(center_frequency_hz, distance_m, params)


def snr_db(tx_power_dbm: float, center_frequency_hz: float, bandwidth_hz: float,
           distance_m: float, params: RadioParams) -> float:
    return (rx_power_dbm(tx_power_dbm, center_frequency_hz, distance_m, params)
            - noise_power_dbm(bandwidth_hz, params))


def link_budget(tx_power_dbm: float, center_frequency_hz: float,
                bandwidth_hz: float, distance_m: float,
                params: RadioParams) -> LinkBudget:
    pl = path_loss_db(center_frequency_hz, distance_m, params)
    rx = tx_power_dbm - pl
    noise = noise_power_dbm(bandwidth_hz, params)
    return LinkBudget(pathloss_db=pl, rx_power_dbm=rx,
                      noise_power_dbm=noise, snr_db=rx - noise)


def is_covered(tx_power_dbm: float, center_frequency_hz: float,
               distance_m: float, params: RadioParams) -> bool:
    """Coverage predicate: received power at or above the RSRP threshold."""
    try:
        rx = rx_power_dbm(tx_power_dbm, center_frequency_hz, distance_m, params)
    except TooClose:
        return True  # closer than the reference distance is trivially covered
    return rx >= params.coverage_rsrp_threshold_dbm


def shannon_capacity_bps(bandwidth_hz: float, snr_value_db: float,
                         params: RadioParams, downlink: bool) -> float:
    """Efficiency- and TDD-scaled Shannon capacity for one direction."""
    fraction = params.tdd_dl_fraction if downlink else 1.0 - params.tdd_dl_fraction
    snr_linear = 10.0 ** (snr_value_db / 10.0)
    return params.efficiency * fraction * bandwidth_hz * math.log2(1.0 + snr_linear)
