"""Beta-oscillation plants behind one stepping interface."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..errors import ConfigurationError
from .base import I_DBS_MAX, Plant
from .lfp import electrode_distances, lfp_from_synaptic_currents, lfp_weights
from .network import POPULATIONS, NetworkConfig, NetworkPlant
from .spikes import striatal_spike_trains
from .surrogate import SurrogateConfig, SurrogatePlant, steady_state_envelope

SEVERITIES = ("healthy", "mild", "moderate", "severe")

# severity -> surrogate baseline envelope b0 (uV)
SURROGATE_B0 = {"healthy": 0.04, "mild": 0.10, "moderate": 0.15, "severe": 0.20}

# severity -> multiplier on the STN bias current of the network
NETWORK_BIAS_SCALE = {"healthy": 0.25, "mild": 0.6, "moderate": 0.8, "severe": 1.0}

DEFAULT_DT = {"network": 25e-6, "surrogate": 1e-3}


@dataclass(frozen=True)
class PlantConfig:
    """Which plant to build and how.

    ``dt=None`` picks the mode's default step (25 us network, 1 ms
    surrogate). ``severity`` overrides ``surrogate.b0`` in surrogate mode and
    scales the STN bias in network mode. ``network_scale`` shrinks every
    population by an integer factor (see :meth:`NetworkConfig.scaled`).
    """

    mode: str = "surrogate"
    dt: float | None = None
    seed: int = 0
    severity: str = "severe"
    network: NetworkConfig = field(default_factory=NetworkConfig)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    network_scale: int = 1

    @property
    def step(self) -> float:
        return DEFAULT_DT[self.mode] if self.dt is None else self.dt

    def validate(self):
        if self.mode not in DEFAULT_DT:
            raise ConfigurationError(f"plant.mode must be one of {sorted(DEFAULT_DT)}, got {self.mode!r}")
        if self.severity not in SEVERITIES:
            raise ConfigurationError(f"plant.severity must be one of {list(SEVERITIES)}, got {self.severity!r}")
        if not self.step > 0:
            raise ConfigurationError(f"plant.dt must be > 0, got {self.dt}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"plant.seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.network_scale < 1:
            raise ConfigurationError(f"plant.network_scale must be >= 1, got {self.network_scale}")
        if self.mode == "network":
            self.resolved_network().validate()
        else:
            # severity sets b0, but the section as written must still be valid
            self.surrogate.validate()
            self.resolved_surrogate().validate()

    def resolved_network(self) -> NetworkConfig:
        return self.network.scaled(self.network_scale) if self.network_scale > 1 else self.network

    def resolved_surrogate(self) -> SurrogateConfig:
        return replace(self.surrogate, b0=SURROGATE_B0[self.severity])


def build_plant(config: PlantConfig) -> Plant:
    """Instantiate the configured plant at rest."""
    config.validate()
    try:
        if config.mode == "network":
            return NetworkPlant(
                config.resolved_network(),
                dt=config.step,
                seed=config.seed,
                severity_scale=NETWORK_BIAS_SCALE[config.severity],
            )
        return SurrogatePlant(config.resolved_surrogate(), dt=config.step, seed=config.seed)
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"plant.dt: {exc}") from exc


__all__ = [
    "DEFAULT_DT",
    "I_DBS_MAX",
    "NETWORK_BIAS_SCALE",
    "POPULATIONS",
    "SEVERITIES",
    "SURROGATE_B0",
    "NetworkConfig",
    "NetworkPlant",
    "Plant",
    "PlantConfig",
    "SurrogateConfig",
    "SurrogatePlant",
    "build_plant",
    "electrode_distances",
    "lfp_from_synaptic_currents",
    "lfp_weights",
    "steady_state_envelope",
    "striatal_spike_trains",
]
