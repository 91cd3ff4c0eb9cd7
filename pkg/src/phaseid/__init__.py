"""Phase identification of low-voltage customers from smart-meter data."""

from .bench import BenchReport, Scenario, accuracy, run_scenario, sweep
from .ensemble import EnsembleConfig, bagging_assign, boosting_assign
from .identify import (kmeans_assign, map_clusters, mav, mlp_assign, mlv_assign, pearson_scores,
                       salient_components)
from .metrology import MeterClass, NoiseContext, inject_noise, sigma_power, sigma_voltage
from .model import (MeasurementCampaign, Phase, PhaseAssignment, drop_voltage_columns,
                    validate_campaign, window)
from .simfeeder import PRESETS, FeederSpec, build_feeder, generate_campaign

__version__ = "0.1.0"

__all__ = [
    "BenchReport",
    "Scenario",
    "accuracy",
    "run_scenario",
    "sweep",
    "EnsembleConfig",
    "bagging_assign",
    "boosting_assign",
    "kmeans_assign",
    "map_clusters",
    "mav",
    "mlp_assign",
    "mlv_assign",
    "pearson_scores",
    "salient_components",
    "MeterClass",
    "NoiseContext",
    "inject_noise",
    "sigma_power",
    "sigma_voltage",
    "MeasurementCampaign",
    "Phase",
    "PhaseAssignment",
    "drop_voltage_columns",
    "validate_campaign",
    "window",
    "PRESETS",
    "FeederSpec",
    "build_feeder",
    "generate_campaign",
]
