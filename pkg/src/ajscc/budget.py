"""Receiver power and link-budget arithmetic for the FPMM receiver.

All levels are in dBm, gains and losses in dB. The receiver has no
automatic gain control, so every ADC-referred level moves one-for-one with
the RF gain ``G``. Antenna-referred levels sit ``G + NF`` below their ADC
counterparts (the noise figure is booked on the RF chain).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ValidationError

DB_PER_BIT = 6.0


@dataclass(frozen=True)
class PowerBudgetParams:
    thermal_noise_floor_dbm: float = -110.0
    noise_figure_db: float = 6.0
    rf_gain_db: float = 0.0
    min_operational_snr_db: float = -30.0
    implementation_loss_db: float = 6.0
    adc_bits: int = 12
    adc_floor_below_noise_db: float = 42.0
    peak_to_average_margin_db: float = 9.0
    path_loss_exponent: float = 3.0

    def __post_init__(self):
        if isinstance(self.adc_bits, bool) or int(self.adc_bits) != self.adc_bits or self.adc_bits < 1:
            raise ValidationError("adc_bits", f"must be an integer >= 1, got {self.adc_bits!r}")
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ValidationError(name, f"must be finite, got {value!r}")


@dataclass(frozen=True)
class PowerBudgetReport:
    noise_floor_adc_dbm: float
    adc_floor_adc_dbm: float
    min_rx_adc_dbm: float
    min_rx_antenna_dbm: float
    full_scale_adc_dbm: float
    max_rx_adc_dbm: float
    max_rx_antenna_dbm: float
    adc_floor_antenna_dbm: float
    adc_dynamic_range_db: float


def compute_budget(params: PowerBudgetParams = PowerBudgetParams()) -> PowerBudgetReport:
    g = params.rf_gain_db
    chain = g + params.noise_figure_db
    noise_floor = params.thermal_noise_floor_dbm + params.noise_figure_db + g
    min_rx = noise_floor + params.min_operational_snr_db + params.implementation_loss_db
    adc_floor = noise_floor - params.adc_floor_below_noise_db
    dynamic_range = DB_PER_BIT * params.adc_bits
    full_scale = adc_floor + dynamic_range
    max_rx = full_scale - params.peak_to_average_margin_db
    return PowerBudgetReport(
        noise_floor_adc_dbm=noise_floor,
        adc_floor_adc_dbm=adc_floor,
        min_rx_adc_dbm=min_rx,
        min_rx_antenna_dbm=min_rx - chain,
        full_scale_adc_dbm=full_scale,
        max_rx_adc_dbm=max_rx,
        max_rx_antenna_dbm=max_rx - chain,
        adc_floor_antenna_dbm=adc_floor - chain,
        adc_dynamic_range_db=dynamic_range,
    )


def path_loss_db(distance_m: float, exponent: float = 3.0) -> float:
    """Log-distance path loss, 0 dB at the 1 m reference."""
    if not distance_m >= 1.0:
        raise ValueError(f"distance must be >= 1 m reference, got {distance_m!r}")
    return 10.0 * exponent * math.log10(distance_m)


def tx_power_dbm(rx_power_dbm: float, coverage_m: float, exponent: float = 3.0) -> float:
    """Transmit power needed to deliver ``rx_power_dbm`` at ``coverage_m``."""
    return rx_power_dbm + path_loss_db(coverage_m, exponent)


def min_tx_power_dbm(coverage_m: float, params: PowerBudgetParams = PowerBudgetParams()) -> float:
    rx = compute_budget(params).min_rx_antenna_dbm
    return tx_power_dbm(rx, coverage_m, params.path_loss_exponent)
