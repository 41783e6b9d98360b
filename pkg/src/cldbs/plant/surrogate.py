"""Closed-form stochastic beta-envelope plant.

The beta amplitude follows a logistic suppression law in the low-passed DBS
amplitude, perturbed by an Ornstein-Uhlenbeck process; the LFP is a beta tone
carrying that envelope plus white background noise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ConfigurationError
from .base import I_DBS_MAX, Plant


@dataclass(frozen=True)
class SurrogateConfig:
    """Parameters of the surrogate law.

    ``b0`` (uV) is the DBS-off envelope scale, ``i50`` (mA) the half-suppression
    amplitude and ``k`` (1/mA) the steepness. ``ou_std`` is the stationary
    standard deviation of the envelope noise, ``background_std`` that of the
    additive white LFP noise per sample.
    """

    b0: float = 0.2
    i50: float = 1.5
    k: float = 2.0
    f_beta: float = 20.0
    tau_p: float = 0.1
    ou_tau: float = 0.5
    ou_std: float = 0.01
    background_std: float = 0.2

    def validate(self):
        if not self.b0 > 0:
            raise ConfigurationError(f"surrogate.b0 must be > 0, got {self.b0}")
        if not 0.0 <= self.i50 <= I_DBS_MAX:
            raise ConfigurationError(f"surrogate.i50 must lie in [0, {I_DBS_MAX}] mA, got {self.i50}")
        if not self.k > 0:
            raise ConfigurationError(f"surrogate.k must be > 0, got {self.k}")
        if not 13.0 <= self.f_beta <= 30.0:
            raise ConfigurationError(f"surrogate.f_beta must lie in [13, 30] Hz, got {self.f_beta}")
        if not self.tau_p > 0:
            raise ConfigurationError(f"surrogate.tau_p must be > 0, got {self.tau_p}")
        if not self.ou_tau > 0:
            raise ConfigurationError(f"surrogate.ou_tau must be > 0, got {self.ou_tau}")
        if self.ou_std < 0:
            raise ConfigurationError(f"surrogate.ou_std must be >= 0, got {self.ou_std}")
        if self.background_std < 0:
            raise ConfigurationError(f"surrogate.background_std must be >= 0, got {self.background_std}")

    def noiseless(self) -> "SurrogateConfig":
        return replace(self, ou_std=0.0, background_std=0.0)


def steady_state_envelope(i_dbs, b0=0.2, i50=1.5, k=2.0):
    """Noise-free steady-state ``b_inst`` under sustained amplitude ``i_dbs``."""
    i_dbs = np.asarray(i_dbs, dtype=float)
    return b0 / (1.0 + np.exp(-k * (i50 - i_dbs)))


class SurrogatePlant(Plant):
    """Beta tone whose envelope is suppressed by the DBS amplitude.

    The plant takes the commanded amplitude rather than the pulse current:
    its suppression law is stated in terms of the amplitude.
    """

    drive = "amplitude"

    def __init__(self, config: SurrogateConfig, dt: float = 1e-3, seed: int = 0):
        config.validate()
        super().__init__(dt=dt, seed=seed)
        if not config.f_beta < 0.5 / dt:
            raise ConfigurationError(f"surrogate.f_beta {config.f_beta} Hz is above Nyquist for dt {dt}")
        self.config = config
        rng = np.random.default_rng([self.seed, 0])
        self.phase = float(rng.uniform(0.0, 2.0 * np.pi))
        self.i_filtered = 0.0
        # the envelope noise starts from its stationary law
        self.ou = float(rng.standard_normal() * config.ou_std)
        self._alpha_p = -np.expm1(-dt / config.tau_p)
        self._rho = np.exp(-dt / config.ou_tau)
        self._epoch = -1
        self.b_inst = self._envelope()

    def _envelope(self):
        c = self.config
        return c.b0 / (1.0 + np.exp(-c.k * (c.i50 - self.i_filtered))) + self.ou

    def _load_epoch(self, epoch):
        rng = np.random.default_rng([self.seed, 1, epoch])
        self._xi_ou = rng.standard_normal(self.steps_per_epoch)
        self._xi_bg = rng.standard_normal(self.steps_per_epoch)
        self._epoch = epoch

    def _advance(self, i_dbs: np.ndarray) -> np.ndarray:
        c = self.config
        out = np.empty(i_dbs.size)
        ou_kick = c.ou_std * np.sqrt(1.0 - self._rho**2)
        two_pi_f = 2.0 * np.pi * c.f_beta
        for j in range(i_dbs.size):
            epoch, offset = divmod(self.steps, self.steps_per_epoch)
            if epoch != self._epoch:
                self._load_epoch(epoch)
            self.i_filtered += self._alpha_p * (i_dbs[j] - self.i_filtered)
            self.ou = self._rho * self.ou + ou_kick * self._xi_ou[offset]
            self.steps += 1
            self.b_inst = self._envelope()
            t = self.steps * self.dt
            out[j] = 0.5 * np.pi * self.b_inst * np.sin(two_pi_f * t + self.phase)
            out[j] += c.background_std * self._xi_bg[offset]
        return out
