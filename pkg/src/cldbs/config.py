"""JSON experiment configuration.

Every field has a default, unknown keys are rejected, and every error message
starts with the dotted path of the offending key.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .control import CONTROLLERS, DbsWaveformSpec, make_controller
from .dsp import DspConfig
from .errors import ConfigurationError
from .metrics import MetricsConfig
from .plant import SEVERITIES, PlantConfig

SCENARIOS = ("dbs_off", "open_loop", "onoff_lif", "dual_lif")


@dataclass(frozen=True)
class ControllerConfig:
    kind: str = "onoff_lif"
    ts: float = 0.02
    tau_m: float = 5.0
    r: float = 0.5
    i_drive: float = 5.0
    b_target: float = 0.104
    t_up: float = 0.104
    t_low: float = 0.05207
    i_min: float = 0.0
    i_max: float = 3.0
    gain: float = 1.0
    i_init: float = 0.0
    open_loop_amplitude: float = 2.5
    pulse_frequency: float = 130.0
    pulse_width: float = 60e-6

    def build(self, kind: str | None = None):
        kind = kind or self.kind
        if kind in ("open_loop", "dbs_off"):
            amp = self.open_loop_amplitude if kind == "open_loop" else 0.0
            return make_controller(kind, amplitude=amp, ts=self.ts)
        names = ("tau_m", "r", "i_drive", "b_target", "t_up", "t_low", "i_min", "i_max", "ts", "gain", "i_init")
        return make_controller(kind, **{n: getattr(self, n) for n in names})

    def waveform(self) -> DbsWaveformSpec:
        return DbsWaveformSpec(self.pulse_frequency, self.pulse_width)

    def validate(self):
        if self.kind not in CONTROLLERS:
            raise ConfigurationError(f"kind must be one of {sorted(CONTROLLERS)}, got {self.kind!r}")
        if not 0.0 <= self.open_loop_amplitude <= self.i_max:
            raise ConfigurationError(f"open_loop_amplitude must lie in [0, {self.i_max}] mA, got {self.open_loop_amplitude}")
        for kind in CONTROLLERS:
            self.build(kind).reset()
        self.waveform().validate()


@dataclass(frozen=True)
class OutputConfig:
    trace: bool = True
    plots: bool = False


@dataclass(frozen=True)
class DatasetConfig:
    severities: tuple = SEVERITIES
    scenarios: tuple = ("dbs_off", "open_loop")
    seeds: tuple = (0,)
    workers: int = 1

    def validate(self):
        for name, allowed in (("severities", SEVERITIES), ("scenarios", SCENARIOS)):
            for v in getattr(self, name):
                if v not in allowed:
                    raise ConfigurationError(f"{name}: {v!r} is not one of {list(allowed)}")
        for s in self.seeds:
            if not (isinstance(s, int) and 0 <= s < 2**64):
                raise ConfigurationError(f"seeds: {s!r} is not a 64-bit unsigned integer")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class ExperimentConfig:
    plant: PlantConfig = field(default_factory=PlantConfig)
    dsp: DspConfig = field(default_factory=DspConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)

    @property
    def duration(self) -> float:
        return self.metrics.t_sim

    def validate(self):
        for name in ("plant", "controller", "metrics", "dataset"):
            try:
                getattr(self, name).validate()
            except (ConfigurationError, ValueError) as exc:
                msg = str(exc)
                # plant messages already carry their section prefix
                raise ConfigurationError(msg if msg.startswith(f"{name}.") else f"{name}.{msg}") from exc
        d = self.dsp
        for attr in ("bandwidth", "arv_window", "calibration_s"):
            if not getattr(d, attr) > 0:
                raise ConfigurationError(f"dsp.{attr} must be > 0, got {getattr(d, attr)}")
        if d.fs is not None and not d.fs > 0:
            raise ConfigurationError(f"dsp.fs must be > 0, got {d.fs}")
        if d.kind not in ("cheby1", "cheby2"):
            raise ConfigurationError(f"dsp.kind must be 'cheby1' or 'cheby2', got {d.kind!r}")
        if d.order < 2 or d.order % 2:
            raise ConfigurationError(f"dsp.order must be an even number >= 2, got {d.order}")
        if self.duration < 5.0:
            raise ConfigurationError(f"metrics.t_sim must be >= 5 s for a closed-loop run, got {self.duration}")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _check_scalar(value, hint, path):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        hint = next(a for a in args if a is not type(None))
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"{path}: expected true/false, got {value!r}")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{path}: expected an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"{path}: expected a string, got {value!r}")
        return value
    if hint is tuple:
        if not isinstance(value, list):
            raise ConfigurationError(f"{path}: expected a list, got {value!r}")
        return tuple(value)
    raise ConfigurationError(f"{path}: unsupported value {value!r}")


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else key
        if key not in known:
            raise ConfigurationError(f"{sub}: unknown key")
        hint = hints[key]
        if dataclasses.is_dataclass(hint):
            kwargs[key] = _build(hint, value, sub)
        else:
            kwargs[key] = _check_scalar(value, hint, sub)
    return cls(**kwargs)


def parse_config(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "").validate()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_config(data)


def with_value(config: ExperimentConfig, dotted: str, value) -> ExperimentConfig:
    """Copy of ``config`` with the field at ``dotted`` (e.g. ``controller.gain``) replaced."""
    data = config.to_dict()
    node = data
    parts = dotted.split(".")
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ConfigurationError(f"{dotted}: unknown parameter path")
        node = node[p]
    if parts[-1] not in node or isinstance(node[parts[-1]], dict):
        raise ConfigurationError(f"{dotted}: unknown parameter path")
    node[parts[-1]] = value
    return parse_config(_to_json_types(data))


def _to_json_types(obj):
    if isinstance(obj, dict):
        return {k: _to_json_types(v) for k, v in obj.items()}
    if isinstance(obj, tuple):
        return [_to_json_types(v) for v in obj]
    return obj
