"""Closed-loop deep-brain-stimulation simulation suite.

Plants that generate subthalamic beta-band LFPs, the beta extraction chain,
LIF-based amplitude controllers, assessment metrics and dataset tooling.
"""

from .control import (
    DbsOffController,
    DbsWaveformSpec,
    DualLifController,
    LifControllerParams,
    LifControllerState,
    OnOffLifController,
    OpenLoopController,
    SimulationTrace,
    run_closed_loop,
)
from .dsp import BetaARVExtractor, DspConfig, design_beta_bandpass
from .metrics import MetricsConfig, MetricsReport, compute_report
from .plant import NetworkConfig, PlantConfig, SurrogateConfig, build_plant
from .timeseries import TimeSeries

__version__ = "0.1.0"

__all__ = [
    "BetaARVExtractor",
    "DbsOffController",
    "DbsWaveformSpec",
    "DspConfig",
    "DualLifController",
    "LifControllerParams",
    "LifControllerState",
    "MetricsConfig",
    "MetricsReport",
    "NetworkConfig",
    "OnOffLifController",
    "OpenLoopController",
    "PlantConfig",
    "SimulationTrace",
    "SurrogateConfig",
    "TimeSeries",
    "build_plant",
    "compute_report",
    "design_beta_bandpass",
    "run_closed_loop",
]
