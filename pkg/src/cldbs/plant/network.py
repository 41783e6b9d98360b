"""Conductance-based cortico-basal-ganglia network plant.

Six populations (cortical pyramidal, cortical interneuron, STN, GPe, GPi,
thalamus) are wired with fixed random in-degrees. STN, GPe, GPi and thalamic
cells follow the Rubin-Terman channel inventories; cortical cells are
regular-spiking / fast-spiking point neurons. Striatal input to GPe is a bank
of Poisson spike sources.

DBS enters as intracellular current: into STN cells near the contact, into
cortical cells (standing in for antidromic activation of cortical axons) and
into a fixed fraction of GPe cells. Coupling to STN and cortex falls off as
1/d with the cell's distance to the contact.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from ..errors import ConfigurationError
from . import _kernels as K
from .base import EPOCH_SECONDS, Plant
from .lfp import electrode_distances, lfp_from_synaptic_currents, lfp_weights
from .spikes import striatal_spike_trains

POPULATIONS = ("cortical", "interneuron", "stn", "gpe", "gpi", "thal")

# (target, source) -> config attribute holding the in-degree
PATHWAYS = {
    ("stn", "gpe"): "stn_from_gpe",
    ("stn", "cortical"): "stn_from_cortex",
    ("gpe", "striatum"): "gpe_from_striatum",
    ("gpe", "gpe"): "gpe_from_gpe",
    ("gpe", "stn"): "gpe_from_stn",
    ("gpi", "stn"): "gpi_from_stn",
    ("gpi", "gpe"): "gpi_from_gpe",
    ("thal", "gpi"): "thal_from_gpi",
    ("cortical", "thal"): "cortex_from_thal",
    ("cortical", "interneuron"): "cortex_from_interneuron",
    ("interneuron", "cortical"): "interneuron_from_cortex",
}


@dataclass(frozen=True)
class NetworkConfig:
    """Population sizes, wiring and cell/synapse parameters.

    Synaptic conductances (``g_*``, mS/cm^2) are totals per target cell for a
    pathway; each of the ``k`` afferents carries ``g / k``. Reducing a
    network's in-degrees therefore keeps the mean drive per cell unchanged.
    """

    n_cortical: int = 100
    n_interneuron: int = 100
    n_stn: int = 100
    n_gpe: int = 100
    n_gpi: int = 100
    n_thal: int = 100

    stn_from_gpe: int = 5
    stn_from_cortex: int = 5
    gpe_from_striatum: int = 1
    gpe_from_gpe: int = 1
    gpe_from_stn: int = 2
    gpi_from_stn: int = 1
    gpi_from_gpe: int = 1
    thal_from_gpi: int = 1
    cortex_from_thal: int = 1
    cortex_from_interneuron: int = 10
    interneuron_from_cortex: int = 10

    striatal_rate: float = 3.0
    cortical_beta_hz: float = 20.0
    cortical_beta_depth: float = 2.5
    cortical_beta_linewidth_hz: float = 1.0
    beta_onset_scale: float = 0.25
    striatal_tau_ms: float = 10.0

    e_ampa: float = 0.0
    e_gaba: float = -85.0
    g_cortex_stn: float = 4.0
    g_gpe_stn: float = 2.0
    g_stn_gpe: float = 2.0
    g_gpe_gpe: float = 0.5
    g_striatum_gpe: float = 0.5
    g_stn_gpi: float = 0.6
    g_gpe_gpi: float = 0.5
    g_gpi_thal: float = 0.1
    g_thal_cortex: float = 0.05
    g_interneuron_cortex: float = 0.2
    g_cortex_interneuron: float = 0.1

    bias_cortical: float = 0.5
    bias_interneuron: float = 0.2
    bias_stn: float = 25.0
    bias_gpe: float = 6.0
    bias_gpi: float = 3.0
    bias_thal: float = 0.0

    noise_cortical: float = 1.0
    noise_interneuron: float = 1.0
    noise_stn: float = 2.0
    noise_gpe: float = 1.0
    noise_gpi: float = 1.0
    noise_thal: float = 0.1

    dbs_stn: float = 1000.0
    dbs_cortical: float = 1000.0
    dbs_gpe: float = 0.0
    gpe_dbs_fraction: float = 0.2

    lfp_gain: float = 0.018
    lfp_dendritic_v: float = -65.0

    def population_size(self, name: str) -> int:
        if name == "striatum":
            return self.n_gpe
        return getattr(self, f"n_{name}")

    def validate(self):
        for name in POPULATIONS:
            if self.population_size(name) < 1:
                raise ConfigurationError(f"network.n_{name} must be >= 1")
        for (target, source), attr in PATHWAYS.items():
            k = getattr(self, attr)
            available = self.population_size(source) - (1 if source == target else 0)
            if k < 1:
                raise ConfigurationError(f"network.{attr} must be >= 1, got {k}")
            if k > available:
                raise ConfigurationError(
                    f"network.{attr} = {k} exceeds the {available} available {source} afferents"
                )
        if self.striatal_rate < 0:
            raise ConfigurationError("network.striatal_rate must be >= 0")
        if not 0.0 <= self.beta_onset_scale < 1.0:
            raise ConfigurationError("network.beta_onset_scale must lie in [0, 1)")
        if not 0.0 <= self.gpe_dbs_fraction <= 1.0:
            raise ConfigurationError("network.gpe_dbs_fraction must lie in [0, 1]")
        for f in fields(self):
            if f.name.startswith(("g_", "noise_", "dbs_")) and getattr(self, f.name) < 0:
                raise ConfigurationError(f"network.{f.name} must be >= 0")

    def scaled(self, factor: int) -> "NetworkConfig":
        """Shrink every population by ``factor``.

        In-degrees divisible by ``factor`` are divided by it; the others are
        kept, capped at the afferent count still available. Because pathway
        conductances are per-cell totals, the mean synaptic drive is preserved.
        """
        if factor < 1:
            raise ConfigurationError("scale factor must be >= 1")
        sizes = {f"n_{p}": max(1, self.population_size(p) // factor) for p in POPULATIONS}
        out = replace(self, **sizes)
        degrees = {}
        for (target, source), attr in PATHWAYS.items():
            k = getattr(self, attr)
            k = k // factor if k % factor == 0 else k
            available = out.population_size(source) - (1 if source == target else 0)
            degrees[attr] = max(1, min(k, available))
        return replace(out, **degrees)


def _draw_afferents(rng, n_post, n_pre, k, exclude_self=False):
    idx = np.empty((n_post, k), dtype=np.int64)
    for i in range(n_post):
        if exclude_self:
            pool = np.delete(np.arange(n_pre), i)
        else:
            pool = np.arange(n_pre)
        idx[i] = rng.choice(pool, size=k, replace=False)
    return idx


class NetworkPlant(Plant):
    """Spiking network plant driven by the instantaneous DBS pulse current."""

    drive = "pulse"

    def __init__(self, config: NetworkConfig, dt: float = 25e-6, seed: int = 0, severity_scale: float = 1.0):
        config.validate()
        super().__init__(dt=dt, seed=seed)
        steps_per_ms = 1e-3 / dt
        if abs(steps_per_ms - round(steps_per_ms)) > 1e-9 or round(steps_per_ms) < 1:
            raise ConfigurationError(f"network dt must divide 1 ms evenly, got {dt}")
        self.config = config
        self.severity_scale = float(severity_scale)
        self._steps_per_noise = int(round(steps_per_ms))

        rng = np.random.default_rng([self.seed, 0])
        c = config
        self.afferents = {}
        for (target, source), attr in PATHWAYS.items():
            self.afferents[(target, source)] = _draw_afferents(
                rng,
                c.population_size(target),
                c.population_size(source),
                getattr(c, attr),
                exclude_self=(target == source),
            )
        self.stn_distance = electrode_distances(c.n_stn, rng)
        self.cortical_distance = electrode_distances(c.n_cortical, rng)
        self.lfp_w = lfp_weights(self.stn_distance)
        d_ref = 0.5
        self._dbs_stn = d_ref / self.stn_distance
        self._dbs_ctx = d_ref / self.cortical_distance
        self._dbs_gpe = np.zeros(c.n_gpe)
        n_stim = int(round(c.gpe_dbs_fraction * c.n_gpe))
        self._dbs_gpe[rng.choice(c.n_gpe, size=n_stim, replace=False)] = 1.0

        self._par = self._pack_params()
        self._init_state(rng)
        self._epoch = -1
        self._beta_phase = float(rng.uniform(0, 2 * np.pi))

    @property
    def lfp_scale(self) -> float:
        # per-cell normalization keeps the LFP amplitude independent of network size
        return self.config.lfp_gain / self.config.n_stn

    def _pack_params(self):
        c = self.config
        p = np.zeros(K.N_PARAMS)

        def per_syn(g, attr):
            return g / getattr(c, attr)

        p[K.P_DT] = self.dt * 1e3
        p[K.P_E_AMPA] = c.e_ampa
        p[K.P_E_GABA] = c.e_gaba
        p[K.P_G_CTX_STN] = per_syn(c.g_cortex_stn, "stn_from_cortex")
        p[K.P_G_GPE_STN] = per_syn(c.g_gpe_stn, "stn_from_gpe")
        p[K.P_G_STN_GPE] = per_syn(c.g_stn_gpe, "gpe_from_stn")
        p[K.P_G_GPE_GPE] = per_syn(c.g_gpe_gpe, "gpe_from_gpe")
        p[K.P_G_STR_GPE] = per_syn(c.g_striatum_gpe, "gpe_from_striatum")
        p[K.P_G_STN_GPI] = per_syn(c.g_stn_gpi, "gpi_from_stn")
        p[K.P_G_GPE_GPI] = per_syn(c.g_gpe_gpi, "gpi_from_gpe")
        p[K.P_G_GPI_THL] = per_syn(c.g_gpi_thal, "thal_from_gpi")
        p[K.P_G_THL_CTX] = per_syn(c.g_thal_cortex, "cortex_from_thal")
        p[K.P_G_INT_CTX] = per_syn(c.g_interneuron_cortex, "cortex_from_interneuron")
        p[K.P_G_CTX_INT] = per_syn(c.g_cortex_interneuron, "interneuron_from_cortex")
        p[K.P_BIAS_CTX] = c.bias_cortical
        p[K.P_BIAS_INT] = c.bias_interneuron
        p[K.P_BIAS_STN] = c.bias_stn * self.severity_scale
        p[K.P_BIAS_GPE] = c.bias_gpe
        p[K.P_BIAS_GPI] = c.bias_gpi
        p[K.P_BIAS_THL] = c.bias_thal
        p[K.P_DBS_CTX] = c.dbs_cortical
        p[K.P_DBS_STN] = c.dbs_stn
        p[K.P_DBS_GPE] = c.dbs_gpe
        p[K.P_STR_TAU] = c.striatal_tau_ms
        p[K.P_LFP_GAIN] = self.lfp_scale
        p[K.P_V_DEND] = c.lfp_dendritic_v
        return p

    def _init_state(self, rng):
        c = self.config

        def block(n_rows, n, gates):
            x = np.zeros((n_rows, n))
            x[K.V] = rng.uniform(-70.0, -60.0, size=n)
            for row, value in gates.items():
                x[row] = value
            return x

        cort = {K.CX_M: 0.02, K.CX_H: 0.9, K.CX_N: 0.05, K.CX_P: 0.05}
        bg = {K.BG_H: 0.5, K.BG_N: 0.1, K.BG_R: 0.1, K.BG_CA: 0.1}
        self.state = {
            "cortical": block(6, c.n_cortical, cort),
            "interneuron": block(6, c.n_interneuron, cort),
            "stn": block(6, c.n_stn, bg),
            "gpe": block(6, c.n_gpe, bg),
            "gpi": block(6, c.n_gpi, bg),
            "thal": block(4, c.n_thal, {K.TH_H: 0.5, K.TH_R: 0.1}),
        }
        self.s_striatum = np.zeros(c.n_gpe)
        n_total = sum(c.population_size(p) for p in POPULATIONS)
        self._above = np.zeros(n_total, dtype=np.bool_)
        self.spike_counts = np.zeros(n_total, dtype=np.int64)

    @property
    def population_slices(self) -> dict[str, slice]:
        out, start = {}, 0
        for p in POPULATIONS:
            n = self.config.population_size(p)
            out[p] = slice(start, start + n)
            start += n
        return out

    def _load_epoch(self, epoch: int):
        c = self.config
        rng = np.random.default_rng([self.seed, 1, epoch])
        n_rows = self.steps_per_epoch // self._steps_per_noise
        sigmas = np.concatenate(
            [np.full(c.population_size(p), getattr(c, f"noise_{p}")) for p in POPULATIONS]
        )
        self._noise = rng.standard_normal((n_rows, sigmas.size)) * sigmas
        self._noise[:, self.population_slices["cortical"]] += self._beta_drive(rng, n_rows)[:, None]
        trains = striatal_spike_trains(c.n_gpe, c.striatal_rate, EPOCH_SECONDS, rng)
        steps = [np.floor(t / self.dt).astype(np.int64) for t in trains]
        src = [np.full(t.size, j, dtype=np.int64) for j, t in enumerate(steps)]
        steps = np.concatenate(steps) if steps else np.zeros(0, np.int64)
        src = np.concatenate(src) if src else np.zeros(0, np.int64)
        order = np.argsort(steps, kind="stable")
        self._ev_step = steps[order]
        self._ev_src = src[order]
        self._ev_ptr = 0
        self._epoch = epoch

    def _beta_drive(self, rng, n_rows):
        # common beta-band bias to the cortical population; the phase diffuses
        # so the rhythm has a Lorentzian line of the configured width
        c = self.config
        step = 1e-3
        diffusion = np.pi * c.cortical_beta_linewidth_hz
        dphi = 2 * np.pi * c.cortical_beta_hz * step + rng.standard_normal(n_rows) * np.sqrt(diffusion * step)
        phase = self._beta_phase + np.cumsum(dphi)
        self._beta_phase = float(np.mod(phase[-1], 2 * np.pi))
        return self.beta_drive_depth * np.sin(phase - dphi)

    @property
    def beta_drive_depth(self) -> float:
        # the pathological rhythm is absent at or below the onset multiplier and
        # grows linearly to the full depth at multiplier 1
        c = self.config
        ramp = (self.severity_scale - c.beta_onset_scale) / (1.0 - c.beta_onset_scale)
        return c.cortical_beta_depth * max(0.0, ramp)

    def _advance(self, i_dbs: np.ndarray) -> np.ndarray:
        out = np.empty(i_dbs.size)
        done = 0
        while done < i_dbs.size:
            epoch, offset = divmod(self.steps, self.steps_per_epoch)
            if epoch != self._epoch:
                self._load_epoch(epoch)
            n = min(i_dbs.size - done, self.steps_per_epoch - offset)
            row0, phase0 = divmod(offset, self._steps_per_noise)
            a = self.afferents
            s = self.state
            self._ev_ptr = K.advance(
                s["cortical"], s["interneuron"], s["stn"], s["gpe"], s["gpi"], s["thal"],
                self.s_striatum, self._above, self.spike_counts,
                a[("stn", "gpe")], a[("stn", "cortical")], a[("gpe", "striatum")],
                a[("gpe", "gpe")], a[("gpe", "stn")], a[("gpi", "stn")], a[("gpi", "gpe")],
                a[("thal", "gpi")], a[("cortical", "thal")], a[("cortical", "interneuron")],
                a[("interneuron", "cortical")],
                self._par, self._dbs_stn, self._dbs_ctx, self._dbs_gpe, self.lfp_w,
                np.ascontiguousarray(i_dbs[done:done + n], dtype=float),
                self._noise, row0, phase0, self._steps_per_noise,
                self._ev_step, self._ev_src, self._ev_ptr, offset, out[done:done + n],
            )
            self.steps += n
            done += n
        return out

    def stn_synaptic_currents(self) -> np.ndarray:
        """Per-STN-cell synaptic current (uA/cm^2) for the current state.

        Currents are evaluated at the fixed dendritic potential rather than the
        somatic voltage, so action potentials do not leak into the LFP.
        """
        s, a, p = self.state, self.afferents, self._par
        v = p[K.P_V_DEND]
        g_in = p[K.P_G_GPE_STN] * s["gpe"][K.BG_S][a[("stn", "gpe")]].sum(axis=1)
        g_ex = p[K.P_G_CTX_STN] * s["cortical"][K.CX_S][a[("stn", "cortical")]].sum(axis=1)
        return g_in * (v - p[K.P_E_GABA]) + g_ex * (v - p[K.P_E_AMPA])

    def current_lfp(self) -> float:
        """LFP sample implied by the present state (the value the next step reports)."""
        return -self.lfp_scale * lfp_from_synaptic_currents(self.stn_synaptic_currents(), self.lfp_w)
