"""Stimulation controllers, DBS waveform and the closed-loop driver.

The LIF controllers identify the membrane potential with the measured beta
ARV. Each control period the membrane equation is Euler-discretized into an
amplitude increment; nothing is reset after a "spike", since the ARV is an
external measurement.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .dsp import BetaARVExtractor, BetaChain, DspConfig, decimate_mean
from .plant.base import I_DBS_MAX, Plant
from .timeseries import TimeSeries

MIN_DURATION = 5.0
DEFAULT_RECORD_FS = 2000.0


@dataclass(frozen=True)
class LifControllerParams:
    tau_m: float = 5.0
    r: float = 0.5
    i_drive: float = 5.0
    b_target: float = 0.104
    t_up: float = 0.104
    t_low: float = 0.05207
    i_min: float = 0.0
    i_max: float = I_DBS_MAX
    ts: float = 0.02
    gain: float = 1.0
    v_reset: float | None = None

    def validate(self):
        if not self.tau_m > 0:
            raise ValueError(f"tau_m must be > 0, got {self.tau_m}")
        if not self.r > 0:
            raise ValueError(f"r must be > 0, got {self.r}")
        if not self.ts > 0:
            raise ValueError(f"ts must be > 0, got {self.ts}")
        if not 0.0 <= self.i_min < self.i_max <= I_DBS_MAX:
            raise ValueError(f"i_min, i_max must satisfy 0 <= i_min < i_max <= {I_DBS_MAX}, got [{self.i_min}, {self.i_max}]")
        if not self.t_low < self.t_up:
            raise ValueError(f"t_low must be < t_up, got {self.t_low} >= {self.t_up}")
        if not self.b_target > 0:
            raise ValueError(f"b_target must be > 0, got {self.b_target}")
        if self.gain < 0:
            raise ValueError(f"gain must be >= 0, got {self.gain}")
        return self


@dataclass
class LifControllerState:
    i_dbs: float = 0.0
    last_arv: float = float("nan")
    steps: int = 0


def _check_arv(beta_arv):
    if not (np.isfinite(beta_arv) and beta_arv >= 0):
        raise ValueError(f"beta ARV must be finite and >= 0, got {beta_arv}")


def clamp(i, params: LifControllerParams) -> float:
    return float(min(max(i, params.i_min), params.i_max))


def lif_increment(error: float, params: LifControllerParams) -> float:
    """Amplitude change over one control period for ARV excess ``error``."""
    p = params
    return p.gain * p.ts * (-error + p.r * p.i_drive) / (p.tau_m * p.r)


def _fire_increment(error, params):
    # the raw law turns negative once the excess passes r * i_drive; never let
    # a large excess push the amplitude the wrong way
    return max(lif_increment(error, params), 0.0)


def onoff_lif_step(state: LifControllerState, params: LifControllerParams, beta_arv: float) -> float:
    _check_arv(beta_arv)
    if beta_arv >= params.b_target:
        return clamp(state.i_dbs + _fire_increment(beta_arv - params.b_target, params), params)
    return state.i_dbs


def dual_lif_step(state: LifControllerState, params: LifControllerParams, beta_arv: float) -> float:
    _check_arv(beta_arv)
    if beta_arv > params.t_up:
        return clamp(state.i_dbs + _fire_increment(beta_arv - params.t_up, params), params)
    if beta_arv < params.t_low:
        return clamp(state.i_dbs - _fire_increment(params.t_low - beta_arv, params), params)
    return state.i_dbs


def open_loop_step(amplitude: float) -> float:
    if not 0.0 <= amplitude <= I_DBS_MAX:
        raise ValueError(f"open-loop amplitude must lie in [0, {I_DBS_MAX}] mA, got {amplitude}")
    return float(amplitude)


class _Controller(BaseEstimator):
    controller_id = "controller"

    def reset(self):
        self.state_ = LifControllerState(i_dbs=self._initial())
        return self

    @property
    def command(self) -> float:
        """Amplitude currently commanded (mA)."""
        if not hasattr(self, "state_"):
            self.reset()
        return self.state_.i_dbs

    def step(self, beta_arv: float) -> float:
        """Consume one ARV sample at a control instant; return the new command."""
        if not hasattr(self, "state_"):
            self.reset()
        i = self._update(float(beta_arv))
        self.state_.i_dbs = i
        self.state_.last_arv = float(beta_arv)
        self.state_.steps += 1
        return i


class OpenLoopController(_Controller):
    """Constant amplitude regardless of the measurement."""

    controller_id = "open_loop"

    def __init__(self, amplitude=2.5, ts=0.02):
        self.amplitude = amplitude
        self.ts = ts

    def _initial(self):
        if not self.ts > 0:
            raise ValueError(f"ts must be > 0, got {self.ts}")
        return open_loop_step(self.amplitude)

    def _update(self, beta_arv):
        return open_loop_step(self.amplitude)


class DbsOffController(OpenLoopController):
    controller_id = "dbs_off"

    def __init__(self, amplitude=0.0, ts=0.02):
        super().__init__(amplitude=amplitude, ts=ts)


class _LifController(_Controller):
    def __init__(self, tau_m=5.0, r=0.5, i_drive=5.0, b_target=0.104, t_up=0.104, t_low=0.05207,
                 i_min=0.0, i_max=I_DBS_MAX, ts=0.02, gain=1.0, i_init=0.0):
        self.tau_m = tau_m
        self.r = r
        self.i_drive = i_drive
        self.b_target = b_target
        self.t_up = t_up
        self.t_low = t_low
        self.i_min = i_min
        self.i_max = i_max
        self.ts = ts
        self.gain = gain
        self.i_init = i_init

    @property
    def params(self) -> LifControllerParams:
        return LifControllerParams(
            tau_m=self.tau_m, r=self.r, i_drive=self.i_drive, b_target=self.b_target, t_up=self.t_up,
            t_low=self.t_low, i_min=self.i_min, i_max=self.i_max, ts=self.ts, gain=self.gain,
        ).validate()

    def _initial(self):
        p = self.params
        if not p.i_min <= self.i_init <= p.i_max:
            raise ValueError(f"i_init must lie in [{p.i_min}, {p.i_max}], got {self.i_init}")
        self._p = p
        return float(self.i_init)


class OnOffLifController(_LifController):
    """Raises the amplitude while the ARV is at or above ``b_target``; holds otherwise."""

    controller_id = "onoff_lif"

    def _update(self, beta_arv):
        return onoff_lif_step(self.state_, self._p, beta_arv)


class DualLifController(_LifController):
    """Raises above ``t_up``, lowers below ``t_low``, holds in between."""

    controller_id = "dual_lif"

    def _update(self, beta_arv):
        return dual_lif_step(self.state_, self._p, beta_arv)


CONTROLLERS = {
    "dbs_off": DbsOffController,
    "open_loop": OpenLoopController,
    "onoff_lif": OnOffLifController,
    "dual_lif": DualLifController,
}


def make_controller(kind: str, **params) -> _Controller:
    if kind not in CONTROLLERS:
        raise ValueError(f"unknown controller {kind!r}; expected one of {sorted(CONTROLLERS)}")
    return CONTROLLERS[kind](**params)


@dataclass(frozen=True)
class DbsWaveformSpec:
    frequency: float = 130.0
    pulse_width: float = 60e-6

    def validate(self):
        if not (self.frequency > 0 and self.pulse_width > 0):
            raise ValueError(f"pulse_frequency and pulse_width must be > 0, got {self.frequency}, {self.pulse_width}")
        if not self.frequency * self.pulse_width < 1.0:
            raise ValueError(f"pulse_width: duty cycle {self.frequency * self.pulse_width:g} must be < 1")
        return self

    @property
    def period(self) -> float:
        return 1.0 / self.frequency

    @property
    def duty(self) -> float:
        return self.frequency * self.pulse_width


def dbs_pulse_train(spec: DbsWaveformSpec, amplitude: float, t):
    """Square pulse train: ``amplitude`` for the first ``pulse_width`` of every period."""
    open_loop_step(amplitude)
    t = np.asarray(t, dtype=float)
    on = np.mod(t, spec.period) < spec.pulse_width
    out = np.where(on, float(amplitude), 0.0)
    return float(out) if out.ndim == 0 else out


def _pulse_charge(spec: DbsWaveformSpec, t):
    # time spent inside pulses on [0, t]
    k = np.floor(t / spec.period)
    return k * spec.pulse_width + np.minimum(t - k * spec.period, spec.pulse_width)


def pulse_interval_means(spec: DbsWaveformSpec, amplitude: float, t_start: float, dt: float, n: int) -> np.ndarray:
    """Mean of the pulse train over ``n`` consecutive intervals of length ``dt``.

    Exact in the pulse charge, so a step longer than a pulse still delivers the
    right amount of current.
    """
    open_loop_step(amplitude)
    edges = t_start + np.arange(n + 1) * dt
    frac = np.diff(_pulse_charge(spec, edges)) / dt
    return np.clip(amplitude * frac, 0.0, amplitude)


@dataclass
class SimulationTrace:
    """Aligned output of one run. Columns share ``fs`` and length."""

    lfp_raw: TimeSeries
    lfp_beta: TimeSeries
    beta_arv: TimeSeries
    dbs_amplitude: TimeSeries
    dbs_current: TimeSeries
    metadata: dict = field(default_factory=dict)

    COLUMNS = ("lfp_raw", "lfp_beta", "beta_arv", "dbs_amplitude", "dbs_current")

    def __post_init__(self):
        series = [getattr(self, c) for c in self.COLUMNS]
        n, fs, t0 = len(series[0]), series[0].fs, series[0].t0
        for c, s in zip(self.COLUMNS, series):
            if len(s) != n or s.fs != fs or s.t0 != t0:
                raise ValueError(f"trace column {c} is not aligned with lfp_raw")

    def __len__(self):
        return len(self.lfp_raw)

    @property
    def fs(self) -> float:
        return self.lfp_raw.fs

    @property
    def times(self) -> np.ndarray:
        return self.lfp_raw.times

    def __eq__(self, other):
        if not isinstance(other, SimulationTrace):
            return NotImplemented
        return all(getattr(self, c) == getattr(other, c) for c in self.COLUMNS) and self.metadata == other.metadata


def _integer_ratio(a, b, what):
    q = a / b
    if abs(q - round(q)) > 1e-9 * max(1.0, q) or round(q) < 1:
        raise ValueError(f"{what} must be a whole multiple ({a} / {b} = {q})")
    return int(round(q))


def record_rate(plant: Plant, chain) -> float:
    if isinstance(chain, BetaARVExtractor):
        return float(chain.fs)
    if chain is not None and chain.fs is not None:
        return float(chain.fs)
    return min(plant.fs, DEFAULT_RECORD_FS)


def _fit_chain(plant: Plant, chain, fs, factor) -> tuple[BetaChain, float]:
    if isinstance(chain, BetaARVExtractor):
        if not hasattr(chain, "coeffs_"):
            raise ValueError("BetaARVExtractor must be fitted before use in a closed loop")
        return chain.chain(), chain.peak_hz_
    cfg = chain or DspConfig()
    ext = BetaARVExtractor(fs=fs, f_center=cfg.f_center, bandwidth=cfg.bandwidth, order=cfg.order,
                           ripple_db=cfg.ripple_db, kind=cfg.kind, arv_window=cfg.arv_window)
    if cfg.f_center is None:
        # centre on the DBS-off peak of an identical, untouched copy of the plant
        probe = copy.deepcopy(plant)
        n = int(round(cfg.calibration_s * plant.fs / factor)) * factor
        lfp = decimate_mean(probe.run(np.zeros(n)), factor)
        ext.fit(TimeSeries(lfp, fs))
    else:
        ext.fit(TimeSeries(np.zeros(0), fs))
    return ext.chain(), ext.peak_hz_


def run_closed_loop(plant: Plant, controller, duration: float, chain=None,
                    waveform: DbsWaveformSpec | None = None, metadata: dict | None = None) -> SimulationTrace:
    """Drive ``plant`` for ``duration`` seconds under ``controller``.

    The plant advances at its own step. Its LFP is boxcar-averaged to the
    record rate, where the beta chain runs streaming. At the end of every
    control period the controller sees the latest ARV sample and the new
    amplitude takes effect for the next period.
    """
    if not duration >= MIN_DURATION:
        raise ValueError(f"duration must be >= {MIN_DURATION} s, got {duration}")
    waveform = (waveform or DbsWaveformSpec()).validate()
    fs = record_rate(plant, chain)
    factor = _integer_ratio(plant.fs, fs, "plant rate over record rate")
    controller.reset()
    ts = controller.ts
    per_block = _integer_ratio(ts * fs, 1.0, "control period times record rate")
    n_blocks = _integer_ratio(duration, ts, "duration over control period")
    beta_chain, peak = _fit_chain(plant, chain, fs, factor)

    n = n_blocks * per_block
    cols = {c: np.empty(n) for c in SimulationTrace.COLUMNS}
    plant_steps = per_block * factor
    step0 = plant.steps
    for b in range(n_blocks):
        amp = controller.command
        t_start = (plant.steps - step0) * plant.dt
        pulse = pulse_interval_means(waveform, amp, t_start, plant.dt, plant_steps)
        drive = pulse if plant.drive == "pulse" else np.full(plant_steps, amp)
        lfp = decimate_mean(plant.run(drive), factor)
        beta, arv = beta_chain.process(lfp)
        sl = slice(b * per_block, (b + 1) * per_block)
        cols["lfp_raw"][sl] = lfp
        cols["lfp_beta"][sl] = beta
        cols["beta_arv"][sl] = arv
        cols["dbs_amplitude"][sl] = amp
        cols["dbs_current"][sl] = decimate_mean(pulse, factor)
        controller.step(arv[-1])

    units = {"lfp_raw": "uV", "lfp_beta": "uV", "beta_arv": "uV", "dbs_amplitude": "mA", "dbs_current": "mA"}
    meta = {"seed": plant.seed, "controller": controller.controller_id, "f_center_hz": peak}
    meta.update(metadata or {})
    return SimulationTrace(**{c: TimeSeries(v, fs, 0.0, units[c]) for c, v in cols.items()}, metadata=meta)
