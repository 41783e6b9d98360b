import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cldbs.dsp import (
    BetaARVExtractor,
    SosFilter,
    Spectrum,
    TrailingMean,
    band_power,
    design_beta_bandpass,
    estimate_beta_peak,
    filter_signal,
    full_wave_rectify,
    moving_average_arv,
    welch_psd,
)
from cldbs.errors import DesignError
from cldbs.timeseries import TimeSeries


def chebyshev_bandpass_db(f, fs, f_center, bandwidth=8.0, order=4, ripple_db=1.0):
    """Closed-form magnitude of the bilinear-transformed Chebyshev I bandpass.

    Prewarp both edges, map the analog frequency through the bandpass-to-
    lowpass substitution and evaluate 1 / (1 + eps^2 T_N^2).
    """
    lo, hi = f_center - bandwidth / 2, f_center + bandwidth / 2
    w1, w2 = np.tan(np.pi * lo / fs), np.tan(np.pi * hi / fs)
    wa = np.tan(np.pi * np.asarray(f, dtype=float) / fs)
    x = np.abs((wa**2 - w1 * w2) / (wa * (w2 - w1)))
    n = order // 2
    t = np.where(x <= 1, np.cos(n * np.arccos(np.minimum(x, 1))), np.cosh(n * np.arccosh(np.maximum(x, 1))))
    eps2 = 10 ** (ripple_db / 10) - 1
    return -10 * np.log10(1 + eps2 * t**2)


# frozen from the closed form above at fs = 2 kHz, center 20 Hz, 8 Hz band
ORACLE_DB = {20.0: -0.96457556, 10.0: -21.83451814, 40.0: -23.07581149, 2.0: -55.16577687, 16.0: -1.0, 24.0: -1.0}


def sine(f, fs, seconds, amp=1.0, phase=0.0):
    t = np.arange(int(round(seconds * fs))) / fs
    return TimeSeries(amp * np.sin(2 * np.pi * f * t + phase), fs)


class TestDesign:
    def test_two_sections(self):
        c = design_beta_bandpass(2000, 20)
        assert c.n_sections == 2
        assert c.sos.shape == (2, 6)

    @pytest.mark.parametrize("f, expected", sorted(ORACLE_DB.items()))
    def test_oracle_matches_frozen_values(self, f, expected):
        assert chebyshev_bandpass_db(f, 2000, 20) == pytest.approx(expected, abs=1e-8)

    @pytest.mark.parametrize("f", sorted(ORACLE_DB))
    def test_design_matches_oracle(self, f):
        c = design_beta_bandpass(2000, 20)
        got = 20 * np.log10(abs(c.response(f)[0]))
        assert got == pytest.approx(ORACLE_DB[f], abs=1e-6)

    def test_passband_and_stopband(self):
        c = design_beta_bandpass(2000, 20)
        g = 20 * np.log10(np.abs(c.response([20.0, 10.0, 40.0])))
        assert -1.0 <= g[0] <= 0.0
        assert g[1] <= -20.0 and g[2] <= -20.0

    def test_ripple_bounded_in_band(self):
        c = design_beta_bandpass(2000, 20)
        f = np.linspace(16, 24, 200)
        g = 20 * np.log10(np.abs(c.response(f)))
        assert g.max() <= 1e-9 and g.min() >= -1.0 - 1e-9

    @pytest.mark.parametrize("fs, fc", [(2000, 999), (2000, 3), (1000, 497), (100, 48)])
    def test_edges_outside_range(self, fs, fc):
        with pytest.raises(DesignError):
            design_beta_bandpass(fs, fc)

    def test_odd_order_rejected(self):
        with pytest.raises(DesignError):
            design_beta_bandpass(2000, 20, order=3)

    def test_type_two_available(self):
        c = design_beta_bandpass(2000, 20, kind="cheby2", ripple_db=40)
        assert np.all(np.abs(c.poles()) < 1)

    @settings(max_examples=100, deadline=None)
    @given(st.sampled_from([250.0, 500.0, 1000.0, 2000.0, 4000.0]), st.floats(8.0, 60.0),
           st.floats(2.0, 12.0), st.sampled_from([2, 4, 6]), st.floats(0.1, 3.0))
    def test_designs_are_stable(self, fs, fc, bw, order, ripple):
        if fc - bw / 2 <= 0 or fc + bw / 2 >= fs / 2:
            return
        c = design_beta_bandpass(fs, fc, bw, order, ripple)
        assert np.all(np.abs(c.poles()) < 1)
        assert c.n_sections == order // 2


class TestFilter:
    def test_zero_in_zero_out(self):
        c = design_beta_bandpass(1000, 20)
        y = filter_signal(c, TimeSeries(np.zeros(500), 1000))
        assert np.all(y.samples == 0) and len(y) == 500

    def test_fs_mismatch(self):
        c = design_beta_bandpass(1000, 20)
        with pytest.raises(ValueError):
            filter_signal(c, TimeSeries(np.zeros(10), 2000))

    def test_center_tone_gain(self):
        c = design_beta_bandpass(2000, 20)
        y = filter_signal(c, sine(20, 2000, 10)).samples[4000:]
        gain = 10 ** (ORACLE_DB[20.0] / 20)
        assert (y.max() - y.min()) / 2 == pytest.approx(gain, rel=0.02)

    def test_low_tone_rejected(self):
        c = design_beta_bandpass(2000, 20)
        y = filter_signal(c, sine(2, 2000, 12)).samples[4000:]
        assert 20 * np.log10((y.max() - y.min()) / 2) <= -30

    def test_causal(self):
        c = design_beta_bandpass(1000, 20)
        x = np.zeros(300)
        x[150] = 1.0
        y = filter_signal(c, TimeSeries(x, 1000)).samples
        assert np.all(y[:150] == 0) and y[150] != 0

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32), st.lists(st.integers(1, 400), min_size=1, max_size=8))
    def test_streaming_bit_identical(self, seed, cuts):
        x = np.random.default_rng(seed).standard_normal(1200)
        c = design_beta_bandpass(1000, 20)
        whole = SosFilter(c).process(x)
        f = SosFilter(c)
        edges = np.unique(np.clip(np.cumsum(cuts), 0, x.size))
        parts = np.split(x, edges)
        chunked = np.concatenate([f.process(p) for p in parts])
        assert np.array_equal(whole, chunked)


class TestRectifyArv:
    def test_constant_negative(self):
        assert np.all(full_wave_rectify(TimeSeries(np.full(5, -2.0), 10)).samples == 2.0)

    def test_nonnegative_identity(self):
        x = TimeSeries(np.abs(np.random.default_rng(0).standard_normal(50)), 10)
        assert full_wave_rectify(x) == x

    def test_rectified_sine_mean(self):
        x = sine(20, 2000, 5.0)  # 100 whole cycles
        assert full_wave_rectify(x).samples.mean() == pytest.approx(2 / np.pi, rel=0.005)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
    def test_rectifier_idempotent(self, v):
        x = TimeSeries(v, 100.0)
        once = full_wave_rectify(x)
        assert full_wave_rectify(once) == once

    def test_arv_of_constant_exact(self):
        x = TimeSeries(np.full(1000, 0.37), 1000)
        assert np.all(moving_average_arv(x, 0.1).samples == 0.37)

    def test_arv_of_rectified_sine(self):
        x = full_wave_rectify(sine(20, 2000, 2.0, amp=3.0))
        y = moving_average_arv(x, 0.1).samples[200:]  # 100 ms = 2 whole periods
        assert np.allclose(y, 2 * 3.0 / np.pi, rtol=0.005)

    def test_impulse(self):
        x = np.zeros(100)
        x[50] = 5.0
        y = moving_average_arv(TimeSeries(x, 1000), 0.02).samples
        assert np.allclose(y[50:70], 5.0 / 20)
        assert np.all(y[:50] == 0) and np.all(y[70:] == 0)

    def test_partial_window_at_start(self):
        y = moving_average_arv(TimeSeries([1.0, 3.0, 5.0, 7.0], 1.0), 3.0).samples
        assert np.allclose(y, [1.0, 2.0, 3.0, 5.0])

    def test_window_shorter_than_a_sample(self):
        with pytest.raises(ValueError):
            moving_average_arv(TimeSeries(np.ones(10), 100), 0.005)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 100), min_size=1, max_size=80), st.integers(1, 20))
    def test_arv_bounded_by_window_max(self, v, n):
        x = np.array(v)
        y = TrailingMean(n).process(x)
        for i in range(x.size):
            w = x[max(0, i - n + 1): i + 1]
            assert -1e-12 <= y[i] <= w.max() * (1 + 1e-12) + 1e-12

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32), st.integers(1, 60), st.lists(st.integers(1, 100), max_size=6))
    def test_trailing_mean_streaming_bit_identical(self, seed, n, cuts):
        x = np.abs(np.random.default_rng(seed).standard_normal(400))
        whole = TrailingMean(n).process(x)
        m = TrailingMean(n)
        parts = np.split(x, np.unique(np.clip(np.cumsum(cuts), 0, x.size)))
        assert np.array_equal(whole, np.concatenate([m.process(p) for p in parts]))


class TestSpectra:
    def test_tone_peak(self):
        s = welch_psd(sine(20, 1000, 10), 1.0)
        assert s.freqs[np.argmax(s.psd)] == 20.0

    def test_white_noise_flat(self):
        x = TimeSeries(np.random.default_rng(1).standard_normal(60 * 1000), 1000)
        s = welch_psd(x, 1.0)
        sel = (s.freqs >= 1) & (s.freqs <= 100)
        db = 10 * np.log10(s.psd[sel] / np.mean(s.psd[sel]))
        assert np.all(np.abs(db) <= 3)
        # two-sided unit variance spread over 500 Hz
        assert np.mean(s.psd[sel]) == pytest.approx(1 / 500, rel=0.05)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32), st.floats(0.1, 10.0), st.floats(1.0, 200.0), st.sampled_from([0.25, 0.5, 1.0]))
    def test_parseval(self, seed, amp, f, seg):
        rng = np.random.default_rng(seed)
        n = 8000
        t = np.arange(n) / 1000
        x = amp * np.sin(2 * np.pi * f * t + rng.uniform(0, 6.28)) + rng.standard_normal(n)
        s = welch_psd(TimeSeries(x, 1000), seg)
        total = s.psd.sum() * s.resolution
        assert total == pytest.approx(x.var(), rel=0.05)

    def test_shape_matches_plain_welch(self):
        from scipy import signal
        x = np.random.default_rng(5).standard_normal(7000) + np.sin(np.arange(7000) / 7)
        s = welch_psd(TimeSeries(x, 1000), 0.5)
        _, ref = signal.welch(x - x.mean(), fs=1000, window="hann", nperseg=500, noverlap=250, detrend=False)
        ratio = s.psd / ref
        assert np.allclose(ratio, ratio[0], rtol=1e-12)
        assert abs(ratio[0] - 1) < 0.05

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.25, 60.0), st.floats(0, np.pi), st.sampled_from([0.25, 0.5, 1.0, 2.0]))
    def test_parseval_pure_tone(self, f, phase, seg):
        x = sine(f, 1000, 8.0, phase=phase)
        s = welch_psd(x, seg)
        assert s.psd.sum() * s.resolution == pytest.approx(x.samples.var(), rel=0.05)

    def test_band_power_full_band(self):
        x = TimeSeries(np.random.default_rng(2).standard_normal(20000), 1000)
        s = welch_psd(x, 1.0)
        assert band_power(s, 0, 500) == pytest.approx(x.samples.var(), rel=0.05)

    def test_band_power_additive(self):
        s = welch_psd(TimeSeries(np.random.default_rng(3).standard_normal(5000), 1000), 1.0)
        assert band_power(s, 1, 12) + band_power(s, 13, 30) == pytest.approx(band_power(s, 1, 30), rel=1e-12)

    def test_band_power_zero_signal(self):
        s = welch_psd(TimeSeries(np.zeros(4000), 1000), 1.0)
        assert band_power(s, 13, 30) == 0.0

    def test_band_power_empty_band(self):
        s = welch_psd(TimeSeries(np.zeros(4000), 1000), 1.0)
        with pytest.raises(ValueError):
            band_power(s, 13.2, 13.4)
        with pytest.raises(ValueError):
            band_power(s, 30, 13)

    def test_welch_argument_errors(self):
        x = TimeSeries(np.zeros(100), 1000)
        with pytest.raises(ValueError):
            welch_psd(x, 1.0)
        with pytest.raises(ValueError):
            welch_psd(x, 0.005)
        with pytest.raises(ValueError):
            welch_psd(x, 0.05, overlap=1.0)

    def test_spectrum_bins_must_increase(self):
        with pytest.raises(ValueError):
            Spectrum([0.0, 2.0, 1.0], [1.0, 1.0, 1.0])


class TestPeak:
    def test_pure_tone(self):
        assert estimate_beta_peak(sine(20, 1000, 10)) == pytest.approx(20.0, abs=0.5)

    def test_larger_tone_wins(self):
        x = sine(15, 1000, 10).samples + sine(25, 1000, 10, amp=2.0).samples
        assert estimate_beta_peak(TimeSeries(x, 1000)) == pytest.approx(25.0, abs=0.5)

    def test_out_of_band_tone_stays_in_range(self):
        x = sine(50, 1000, 10).samples + 1e-3 * np.random.default_rng(0).standard_normal(10000)
        assert 13 <= estimate_beta_peak(TimeSeries(x, 1000)) <= 30

    def test_too_short(self):
        with pytest.raises(ValueError):
            estimate_beta_peak(sine(20, 1000, 4.9))

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1e-3, 1e3), st.integers(0, 2**32))
    def test_scale_invariant(self, c, seed):
        rng = np.random.default_rng(seed)
        x = sine(rng.uniform(14, 29), 500, 6).samples + rng.standard_normal(3000)
        a = estimate_beta_peak(TimeSeries(x, 500))
        assert estimate_beta_peak(TimeSeries(c * x, 500)) == a


class TestExtractor:
    def test_fit_finds_peak_and_designs(self):
        x = sine(22, 1000, 8).samples + 0.1 * np.random.default_rng(0).standard_normal(8000)
        est = BetaARVExtractor(fs=1000).fit(x)
        assert est.peak_hz_ == pytest.approx(22.0, abs=0.5)
        assert est.coeffs_.f_center == est.peak_hz_

    def test_transform_matches_chain(self):
        x = sine(20, 1000, 6)
        est = BetaARVExtractor(fs=1000, f_center=20.0).fit(x)
        manual = moving_average_arv(full_wave_rectify(filter_signal(est.coeffs_, x)), 0.1).samples
        assert np.array_equal(est.transform(x), manual)

    def test_params_roundtrip(self):
        est = BetaARVExtractor(fs=2000, bandwidth=6.0)
        assert est.get_params()["bandwidth"] == 6.0
        assert est.set_params(order=6).order == 6

    def test_unfitted(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            BetaARVExtractor().transform(np.zeros(100))

    def test_rejects_multichannel(self):
        with pytest.raises(ValueError):
            BetaARVExtractor(f_center=20.0).fit(np.zeros((10, 2)))
