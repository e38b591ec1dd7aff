"""Analog N:1 Shannon-mapping compression and FPMM link simulation."""

__version__ = "0.1.0"

from .budget import PowerBudgetParams, PowerBudgetReport, compute_budget, min_tx_power_dbm, path_loss_db
from .fpmm import (
    FpmmConfig,
    FrequencyPlan,
    MdrReport,
    ScramblerState,
    apply_channel,
    descramble,
    detect,
    plan_frequencies,
    quantize_encoded,
    run_mdr_experiment,
    scramble,
    synthesize,
)
from .mapping import DecodedVector, Mapping, MappingConfig, build_mapping, decode, encode
from .mse import MseBreakdown, NoiseModel, OptimizationResult, closed_form_mse, monte_carlo_mse, optimize_levels
