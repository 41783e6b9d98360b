import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cldbs.control import SimulationTrace
from cldbs.metrics import (
    MetricsConfig,
    comparison_csv,
    compute_report,
    error_signal,
    mse,
    mse_percent,
    power_consumption,
    reference_power,
    suppression_efficiency,
)
from cldbs.timeseries import TimeSeries

FS = 1000.0


def const(v, n=30001, fs=FS, unit="uV"):
    return TimeSeries(np.full(n, float(v)), fs, unit=unit)


def trace(arv, amp):
    arv, amp = np.asarray(arv, float), np.asarray(amp, float)
    z = TimeSeries(np.zeros(arv.size), FS)
    return SimulationTrace(z, z, TimeSeries(arv, FS), TimeSeries(amp, FS, unit="mA"),
                           TimeSeries(amp, FS, unit="mA"), metadata={"controller": "test"})


series = st.lists(st.floats(-10, 10), min_size=2, max_size=200).map(lambda v: TimeSeries(v, FS))


class TestErrorAndMse:
    def test_zero_at_target(self):
        assert np.all(error_signal(const(0.104), 0.104).samples == 0.0)

    def test_double_target(self):
        assert np.all(error_signal(const(0.208), 0.104).samples == 1.0)

    def test_zero_measurement(self):
        assert np.all(error_signal(const(0.0), 0.104).samples == -1.0)

    def test_bad_target(self):
        with pytest.raises(ValueError):
            error_signal(const(1.0), 0.0)

    def test_mse_constants(self):
        assert mse(const(0.0)) == 0.0
        assert mse(const(1.0)) == 1.0

    def test_mse_square_wave(self):
        x = np.where((np.arange(30001) // 50) % 2 == 0, 1.0, -1.0)
        assert mse(TimeSeries(x, FS)) == 1.0

    def test_mse_explicit_t_sim(self):
        assert mse(const(1.0), t_sim=60.0) == pytest.approx(0.5, rel=1e-12)

    def test_mse_empty(self):
        with pytest.raises(ValueError):
            mse(TimeSeries(np.zeros(0), FS))

    def test_percent(self):
        assert mse_percent(0.3, 0.3) == 100.0
        assert mse_percent(0.0, 0.3) == 0.0
        with pytest.raises(ValueError):
            mse_percent(1.0, 0.0)

    def test_trapezoid_linear_closed_form(self):
        # e^2 = t is linear, which the trapezoid rule integrates exactly: mean T / 2
        t = np.arange(30001) / FS
        e = TimeSeries(np.sqrt(t), FS)
        assert mse(e) == pytest.approx(30.0 / 2, rel=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, 100), st.floats(0, 100), st.integers(2, 5000))
    def test_trapezoid_exact_on_linear(self, a, b, n):
        t = np.arange(n) / FS
        span = (n - 1) / FS
        e = TimeSeries(np.sqrt(a + b * t), FS)
        closed = a + b * span / 2
        assert math.isclose(mse(e), closed, rel_tol=1e-12, abs_tol=1e-300)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, 3), st.integers(2, 5000), st.floats(1, 5000))
    def test_power_constant_closed_form(self, amp, n, z):
        p = power_consumption(TimeSeries(np.full(n, amp), FS, unit="mA"), z)
        assert math.isclose(p, z * (amp * 1e-3) ** 2, rel_tol=1e-12, abs_tol=1e-300)


class TestPower:
    def test_constant_closed_form(self):
        p = power_consumption(const(2.5, unit="mA"), 500.0)
        assert abs(p - 3.125e-3) / 3.125e-3 <= 1e-9

    def test_zero(self):
        assert power_consumption(const(0.0, unit="mA"), 500.0) == 0.0

    def test_halving_quarters(self):
        full = power_consumption(const(2.0, unit="mA"))
        half = power_consumption(const(1.0, unit="mA"))
        assert half == pytest.approx(full / 4, rel=1e-15)

    def test_bad_impedance(self):
        with pytest.raises(ValueError):
            power_consumption(const(1.0), 0.0)

    def test_reference(self):
        assert reference_power(MetricsConfig()) == pytest.approx(3.125e-3, rel=1e-12)


class TestEfficiency:
    def test_no_suppression(self):
        off = np.full(100, 0.2)
        assert suppression_efficiency(off, off, 10.0) == 0.0

    def test_half(self):
        off = np.full(100, 0.2)
        assert suppression_efficiency(off, off / 2, 10.0) == pytest.approx(5.0, rel=1e-15)

    def test_as_printed(self):
        off = np.full(100, 0.2)
        assert suppression_efficiency(off, off, 10.0, "as_printed") == pytest.approx(10.0)
        assert suppression_efficiency(off, off / 2, 10.0, "as_printed") == pytest.approx(5.0)

    @pytest.mark.parametrize("kwargs", [dict(power_uw=0.0), dict(b_ctrl=np.ones(5)), dict(variant="other")])
    def test_errors(self, kwargs):
        args = dict(b_off=np.ones(10), b_ctrl=np.ones(10), power_uw=1.0)
        args.update(kwargs)
        with pytest.raises(ValueError):
            suppression_efficiency(**args)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.01, 0.99), st.floats(0.1, 1e4), st.floats(1.01, 10.0))
    def test_monotonicity(self, frac, power, k):
        off = np.full(50, 0.3)
        base = suppression_efficiency(off, off * (1 - frac), power)
        assert suppression_efficiency(off, off * (1 - frac), power * k) < base
        more = min(1.0, frac * k)
        assert suppression_efficiency(off, off * (1 - more), power) > base


class TestScaling:
    @settings(max_examples=100, deadline=None)
    @given(series, st.floats(-1e3, 1e3))
    def test_mse_quadratic(self, e, c):
        scaled = mse(e.with_samples(c * e.samples))
        assert scaled == pytest.approx(c**2 * mse(e), rel=1e-9, abs=1e-300)
        assert mse(e) >= 0

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 3), min_size=2, max_size=200), st.floats(0, 1), st.floats(1, 5000))
    def test_power_quadratic(self, v, c, z):
        i = TimeSeries(v, FS, unit="mA")
        p = power_consumption(i, z)
        assert p >= 0
        assert power_consumption(i.with_samples(c * i.samples), z) == pytest.approx(c**2 * p, rel=1e-9, abs=1e-300)


class TestReport:
    def test_baseline_against_itself(self):
        off = trace(np.full(30001, 0.2), np.zeros(30001))
        r = compute_report(off, off)
        assert r.mse_pct == 100.0
        assert r.power_w == 0.0
        assert math.isnan(r.efficiency_std)
        assert r.to_dict()["efficiency_std"] is None
        assert json.loads(r.to_json())["mse_pct"] == 100.0

    def test_open_loop_reference(self):
        n = 30001
        off = trace(np.full(n, 0.2), np.zeros(n))
        ol = trace(np.full(n, 0.1), np.full(n, 2.5))
        r = compute_report(ol, off)
        assert r.power_pct == pytest.approx(100.0, rel=1e-12)
        assert r.power_w == pytest.approx(3.125e-3, rel=1e-12)
        assert r.efficiency_std == pytest.approx(100 * 0.5 / 3125.0, rel=1e-12)
        assert r.t_sim == pytest.approx(28.0) and r.burn_in_excluded == 2.0

    def test_burn_in_excluded(self):
        n = 30001
        arv = np.full(n, 0.104)
        arv[:2000] = 50.0  # only inside the first 2 s
        off = trace(np.full(n, 0.208), np.zeros(n))
        r = compute_report(trace(arv, np.zeros(n)), off)
        assert r.mse_raw == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            compute_report(trace(np.ones(100), np.zeros(100)), trace(np.ones(90), np.zeros(90)))

    def test_csv(self):
        n = 30001
        off = trace(np.full(n, 0.2), np.zeros(n))
        text = comparison_csv([compute_report(off, off), compute_report(trace(np.full(n, 0.1), np.full(n, 1.0)), off)])
        lines = text.splitlines()
        assert lines[0].startswith("controller,mse_pct,power_pct,efficiency_std")
        assert len(lines) == 3
        with pytest.raises(ValueError):
            comparison_csv([])

    def test_config_validation(self):
        with pytest.raises(ValueError):
            MetricsConfig(t_sim=2.0, burn_in=2.0).validate()
        with pytest.raises(ValueError):
            MetricsConfig(z_e=0.0).validate()
