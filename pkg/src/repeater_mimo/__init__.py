"""Uplink repeater-assisted massive MIMO with a third-order PA at the repeater."""

from .bussgang import (
    BussgangModel,
    DistortionCovarianceError,
    bussgang_gain,
    bussgang_model,
    distortion_covariance,
    received_covariance,
    repeater_input_power,
)
from .channel import ChannelRealization, SeedPolicy, draw_realization, sample_cn
from .combining import Flavor, da_combiner, dua_combiner, se_for_combiner, se_optimal
from .runner import SweepResult, SweepSpec, evaluate_cell, run_sweep
from .scenario import Scenario, SystemParams, db_to_linear, node_distance, noise_variance, pathloss_db

__all__ = [
    "BussgangModel",
    "ChannelRealization",
    "DistortionCovarianceError",
    "Flavor",
    "Scenario",
    "SeedPolicy",
    "SweepResult",
    "SweepSpec",
    "SystemParams",
    "bussgang_gain",
    "bussgang_model",
    "da_combiner",
    "db_to_linear",
    "distortion_covariance",
    "draw_realization",
    "dua_combiner",
    "evaluate_cell",
    "node_distance",
    "noise_variance",
    "pathloss_db",
    "received_covariance",
    "repeater_input_power",
    "run_sweep",
    "sample_cn",
    "se_for_combiner",
    "se_optimal",
]
