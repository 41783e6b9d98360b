"""Controller assessment: tracking error, stimulation power, suppression efficiency.

All integrals use the trapezoidal rule. Power is reported in W; conversion to
uW for the efficiency happens only in :func:`suppression_efficiency`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .timeseries import TimeSeries, as_samples

EFFICIENCY_VARIANTS = ("standard", "as_printed")


@dataclass(frozen=True)
class MetricsConfig:
    z_e: float = 500.0
    b_target: float = 0.104
    t_sim: float = 30.0
    burn_in: float = 2.0
    reference_amplitude: float = 2.5

    def validate(self):
        if not self.z_e > 0:
            raise ValueError(f"z_e must be > 0, got {self.z_e}")
        if not self.b_target > 0:
            raise ValueError(f"b_target must be > 0, got {self.b_target}")
        if not self.t_sim > self.burn_in >= 0:
            raise ValueError(f"t_sim must exceed burn_in >= 0, got t_sim={self.t_sim}, burn_in={self.burn_in}")
        return self


def _span(x: TimeSeries) -> float:
    return (len(x) - 1) / x.fs


def _time_average(x: TimeSeries, t_sim: float | None) -> float:
    """Trapezoidal integral of ``x`` divided by ``t_sim`` (default: the span).

    The integral is taken in sample units and rescaled afterwards, which keeps
    the average of a constant exactly equal to that constant.
    """
    y = x.samples
    if y.size == 0:
        raise ValueError("cannot integrate an empty series")
    span = _span(x)
    t_sim = span if t_sim is None else t_sim
    if not t_sim > 0:
        raise ValueError(f"t_sim must be > 0, got {t_sim}")
    if y.size == 1:
        return 0.0
    mean = float(np.trapezoid(y)) / (y.size - 1)
    return mean if t_sim == span else mean * (span / t_sim)


def error_signal(b_measured: TimeSeries, b_target: float) -> TimeSeries:
    if not b_target > 0:
        raise ValueError(f"b_target must be > 0, got {b_target}")
    return b_measured.with_samples((b_measured.samples - b_target) / b_target, unit="1")


def mse(e: TimeSeries, t_sim: float | None = None) -> float:
    """Time-averaged squared error; ``t_sim`` defaults to the span of ``e``."""
    if len(e) == 0:
        raise ValueError("mse of an empty series")
    return _time_average(e.with_samples(e.samples**2), t_sim)


def mse_percent(mse_controller: float, mse_dbs_off: float) -> float:
    if not mse_dbs_off > 0:
        raise ValueError(f"DBS-off baseline MSE must be > 0, got {mse_dbs_off}")
    return 100.0 * (mse_controller / mse_dbs_off)


def power_consumption(i_dbs: TimeSeries, z_e: float = 500.0, t_sim: float | None = None) -> float:
    """Mean electrical power (W) of a current series given in mA."""
    if not z_e > 0:
        raise ValueError(f"z_e must be > 0, got {z_e}")
    amps = i_dbs.samples * 1e-3
    return _time_average(i_dbs.with_samples(z_e * amps**2, unit="W"), t_sim)


def suppression_efficiency(b_off, b_ctrl, power_uw: float, variant: str = "standard") -> float:
    """Beta suppression per uW, in %/uW.

    ``standard`` divides the mean fractional suppression by power. ``as_printed``
    puts ``1 -`` in front of the mean, which is largest when nothing is
    suppressed; it is kept for comparison only.
    """
    off, ctrl = as_samples(b_off), as_samples(b_ctrl)
    if off.shape != ctrl.shape:
        raise ValueError(f"trace lengths differ: {off.size} vs {ctrl.size}")
    if off.size == 0:
        raise ValueError("empty traces")
    if not power_uw > 0:
        raise ValueError(f"power must be > 0 uW, got {power_uw}")
    if not np.all(off > 0):
        raise ValueError("DBS-off ARV must be > 0 over the retained span")
    s = float(np.mean((off - ctrl) / off))
    if variant == "standard":
        return 100.0 * s / power_uw
    if variant == "as_printed":
        return 100.0 * (1.0 - s) / power_uw
    raise ValueError(f"variant must be one of {EFFICIENCY_VARIANTS}, got {variant!r}")


def reference_power(config: MetricsConfig) -> float:
    """Power of open-loop stimulation at the reference amplitude."""
    i = TimeSeries(np.full(2, config.reference_amplitude), 1.0, unit="mA")
    return power_consumption(i, config.z_e)


@dataclass(frozen=True)
class MetricsReport:
    controller: str
    mse_raw: float
    mse_pct: float
    power_w: float
    power_pct: float
    efficiency_std: float
    efficiency_as_printed: float
    t_sim: float
    burn_in_excluded: float

    def to_dict(self) -> dict:
        # JSON has no NaN; undefined efficiencies (zero power) become null
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in asdict(self).items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def compute_report(trace, dbs_off, config: MetricsConfig | None = None, controller: str | None = None) -> MetricsReport:
    """Score ``trace`` against the DBS-off run of the same plant and seed.

    Power uses the commanded amplitude series. Both traces are cut to the
    span after ``burn_in`` and before ``t_sim``.
    """
    config = (config or MetricsConfig()).validate()
    if len(trace) != len(dbs_off) or trace.fs != dbs_off.fs:
        raise ValueError("trace and DBS-off baseline must share length and fs")

    def keep(x):
        return x.slice_time(config.burn_in, config.t_sim + 0.5 / x.fs)

    arv, arv_off = keep(trace.beta_arv), keep(dbs_off.beta_arv)
    if len(arv) < 2:
        raise ValueError("nothing left after burn-in exclusion")
    t_span = _span(arv)
    m = mse(error_signal(arv, config.b_target), t_span)
    m_off = mse(error_signal(arv_off, config.b_target), t_span)
    p = power_consumption(keep(trace.dbs_amplitude), config.z_e, t_span)
    p_uw = p * 1e6
    if p > 0:
        eff = suppression_efficiency(arv_off, arv, p_uw, "standard")
        eff_printed = suppression_efficiency(arv_off, arv, p_uw, "as_printed")
    else:
        eff = eff_printed = float("nan")
    return MetricsReport(
        controller=controller or trace.metadata.get("controller", "unknown"),
        mse_raw=m,
        mse_pct=mse_percent(m, m_off),
        power_w=p,
        power_pct=100.0 * (p / reference_power(config)),
        efficiency_std=eff,
        efficiency_as_printed=eff_printed,
        t_sim=t_span,
        burn_in_excluded=config.burn_in,
    )


COMPARISON_COLUMNS = ("controller", "mse_pct", "power_pct", "efficiency_std", "efficiency_as_printed", "power_w",
                      "mse_raw")


def comparison_csv(reports) -> str:
    if not reports:
        raise ValueError("no reports to tabulate")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARISON_COLUMNS)
    for r in reports:
        d = r.to_dict()
        w.writerow(["" if d[c] is None else (repr(d[c]) if isinstance(d[c], float) else d[c])
                    for c in COMPARISON_COLUMNS])
    return buf.getvalue()
