"""Beta-band extraction: bandpass, rectification, ARV and spectra.

Every streaming stage keeps its own carried state so that feeding a signal in
chunks gives bit-for-bit the same output as one call on the whole signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import DesignError
from .timeseries import TimeSeries, as_samples

BETA_BAND = (13.0, 30.0)


@dataclass(frozen=True)
class FilterCoeffs:
    """Second-order-section cascade plus the design it came from.

    Each row of ``sos`` is ``[b0, b1, b2, 1, a1, a2]``.
    """

    sos: np.ndarray
    order: int
    f_center: float
    bandwidth: float
    ripple_db: float
    fs: float
    kind: str = "cheby1"

    @property
    def n_sections(self) -> int:
        return self.sos.shape[0]

    @property
    def edges(self) -> tuple[float, float]:
        return self.f_center - self.bandwidth / 2, self.f_center + self.bandwidth / 2

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots(s[3:]) for s in self.sos])

    def response(self, freqs) -> np.ndarray:
        """Complex frequency response at ``freqs`` (Hz)."""
        _, h = signal.sosfreqz(self.sos, worN=np.atleast_1d(np.asarray(freqs, dtype=float)), fs=self.fs)
        return h


@dataclass(frozen=True)
class Spectrum:
    freqs: np.ndarray
    psd: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        p = np.asarray(self.psd, dtype=float)
        if f.shape != p.shape:
            raise ValueError("freqs and psd must have the same shape")
        if f.size > 1 and not np.all(np.diff(f) > 0):
            raise ValueError("frequency bins must be strictly increasing")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "psd", p)

    @property
    def resolution(self) -> float:
        return float(self.freqs[1] - self.freqs[0]) if self.freqs.size > 1 else float("nan")


def design_beta_bandpass(
    fs: float,
    f_center: float,
    bandwidth: float = 8.0,
    order: int = 4,
    ripple_db: float = 1.0,
    kind: str = "cheby1",
) -> FilterCoeffs:
    """Chebyshev bandpass with edges ``f_center +/- bandwidth/2``.

    ``order`` counts the bandpass poles: the lowpass prototype has order
    ``order // 2`` and the bandpass transform doubles it, so order 4 yields two
    second-order sections. For ``kind="cheby2"`` the ``ripple_db`` value is the
    stopband attenuation.
    """
    lo, hi = f_center - bandwidth / 2, f_center + bandwidth / 2
    if not (fs > 0 and bandwidth > 0):
        raise DesignError(f"fs and bandwidth must be positive (got fs={fs}, bandwidth={bandwidth})")
    if not (0 < lo and hi < fs / 2):
        raise DesignError(f"band edges [{lo:g}, {hi:g}] Hz must lie inside (0, {fs / 2:g}) Hz")
    if order < 2 or order % 2:
        raise DesignError(f"bandpass order must be an even number >= 2, got {order}")
    if not ripple_db > 0:
        raise DesignError(f"ripple_db must be > 0, got {ripple_db}")
    if kind == "cheby1":
        sos = signal.cheby1(order // 2, ripple_db, [lo, hi], btype="bandpass", fs=fs, output="sos")
    elif kind == "cheby2":
        sos = signal.cheby2(order // 2, ripple_db, [lo, hi], btype="bandpass", fs=fs, output="sos")
    else:
        raise DesignError(f"kind must be 'cheby1' or 'cheby2', got {kind!r}")
    coeffs = FilterCoeffs(np.asarray(sos), order, float(f_center), float(bandwidth), float(ripple_db), float(fs), kind)
    if not np.all(np.abs(coeffs.poles()) < 1.0):
        raise DesignError(f"unstable design for band [{lo:g}, {hi:g}] Hz at fs={fs:g}")
    return coeffs


class SosFilter:
    """Causal section cascade with carried state, zero initial condition."""

    def __init__(self, coeffs: FilterCoeffs):
        self.coeffs = coeffs
        self.zi = np.zeros((coeffs.n_sections, 2))

    def process(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.size == 0:
            return x.copy()
        y, self.zi = signal.sosfilt(self.coeffs.sos, x, zi=self.zi)
        return y


def filter_signal(coeffs: FilterCoeffs, x: TimeSeries) -> TimeSeries:
    if x.fs != coeffs.fs:
        raise ValueError(f"signal fs {x.fs} differs from the design fs {coeffs.fs}")
    return x.with_samples(SosFilter(coeffs).process(x.samples))


def full_wave_rectify(x: TimeSeries) -> TimeSeries:
    return x.with_samples(np.abs(x.samples))


def window_samples(window: float, fs: float) -> int:
    if not window * fs >= 1.0 - 1e-9:
        raise ValueError(f"ARV window {window} s is shorter than one sample at {fs} Hz")
    return int(round(window * fs))


class TrailingMean:
    """Causal mean over the last ``n`` samples.

    Before ``n`` samples have been seen the mean is over those available.
    Each mean is clipped to its window's range; that is exact arithmetic-wise
    and removes the rounding that would otherwise make a constant input come
    back off by an ulp.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"window must hold at least one sample, got {n}")
        self.n = int(n)
        # NaN marks the not-yet-seen part of the first windows
        self.history = np.full(self.n - 1, np.nan)
        self.seen = 0

    def process(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.size == 0:
            return x.copy()
        buf = np.concatenate([self.history, x])
        view = np.lib.stride_tricks.sliding_window_view(buf, self.n)
        counts = np.minimum(self.seen + np.arange(1, x.size + 1), self.n)
        mean = np.nansum(view, axis=1) / counts
        out = np.clip(mean, np.nanmin(view, axis=1), np.nanmax(view, axis=1))
        self.seen += x.size
        self.history = buf[buf.size - (self.n - 1):] if self.n > 1 else self.history
        return out


def moving_average_arv(x: TimeSeries, window: float = 0.1) -> TimeSeries:
    """Trailing-window mean of an already rectified signal."""
    return x.with_samples(TrailingMean(window_samples(window, x.fs)).process(x.samples))


def welch_psd(x: TimeSeries, segment: float, overlap: float = 0.5) -> Spectrum:
    """Hann-window averaged periodogram, one-sided density scaling.

    The global mean is removed once instead of per segment, so power below
    the segment resolution is kept. Plain Welch integrates to a mean square
    weighted by how much window energy covers each sample, and Hann at 50%
    overlap covers unevenly; the PSD is rescaled by one factor so that it
    integrates to the unweighted mean square of the samples the segments
    span. The spectral shape is untouched.
    """
    nperseg = int(round(segment * x.fs))
    if nperseg < 8:
        raise ValueError(f"segment of {segment} s gives {nperseg} samples; need at least 8")
    if nperseg > len(x):
        raise ValueError(f"segment of {nperseg} samples is longer than the signal ({len(x)})")
    if not 0.0 <= overlap < 1.0:
        raise ValueError(f"overlap must lie in [0, 1), got {overlap}")
    y = x.samples - x.samples.mean()
    noverlap = int(round(overlap * nperseg))
    f, p = signal.welch(y, fs=x.fs, window="hann", nperseg=nperseg, noverlap=noverlap, detrend=False,
                        scaling="density")
    hop = nperseg - noverlap
    n_seg = 1 + (y.size - nperseg) // hop
    span = y[: (n_seg - 1) * hop + nperseg]
    w2 = signal.get_window("hann", nperseg) ** 2
    cover = np.zeros(span.size)
    for k in range(n_seg):
        cover[k * hop: k * hop + nperseg] += w2
    weighted = np.dot(cover, span**2) / cover.sum()
    if weighted > 0:
        p = p * (np.mean(span**2) / weighted)
    return Spectrum(f, p)


def band_power(s: Spectrum, f_lo: float, f_hi: float) -> float:
    if not f_lo < f_hi:
        raise ValueError(f"need f_lo < f_hi, got [{f_lo}, {f_hi}]")
    sel = (s.freqs >= f_lo) & (s.freqs <= f_hi)
    if not sel.any():
        raise ValueError(f"no frequency bins in [{f_lo}, {f_hi}] Hz")
    return float(s.psd[sel].sum() * s.resolution)


def band_fraction(s: Spectrum, band=BETA_BAND, total=(1.0, 100.0)) -> float:
    """Power in ``band`` as a fraction of the power in ``total``."""
    denom = band_power(s, *total)
    return band_power(s, *band) / denom if denom > 0 else 0.0


def estimate_beta_peak(x: TimeSeries, segment: float = 2.0, band=BETA_BAND) -> float:
    """Frequency of the Welch PSD maximum inside ``band``."""
    if x.duration < 5.0:
        raise ValueError(f"peak estimation needs at least 5 s of signal, got {x.duration:g} s")
    s = welch_psd(x, segment)
    sel = (s.freqs >= band[0]) & (s.freqs <= band[1])
    return float(s.freqs[sel][np.argmax(s.psd[sel])])


@dataclass(frozen=True)
class DspConfig:
    """Beta-chain settings. ``f_center=None`` re-centers on the DBS-off peak."""

    f_center: float | None = None
    bandwidth: float = 8.0
    order: int = 4
    ripple_db: float = 1.0
    kind: str = "cheby1"
    arv_window: float = 0.1
    calibration_s: float = 5.0
    fs: float | None = None
    peak_band: tuple = field(default=BETA_BAND)


class BetaChain:
    """Streaming filter -> rectify -> ARV."""

    def __init__(self, coeffs: FilterCoeffs, arv_window: float = 0.1):
        self.coeffs = coeffs
        self.filter = SosFilter(coeffs)
        self.mean = TrailingMean(window_samples(arv_window, coeffs.fs))

    def process(self, lfp):
        beta = self.filter.process(lfp)
        return beta, self.mean.process(np.abs(beta))


class BetaARVExtractor(TransformerMixin, BaseEstimator):
    """Estimator wrapper around the beta chain.

    ``fit`` locates the beta peak of a (DBS-off) LFP unless ``f_center`` is
    given, and designs the bandpass; ``transform`` returns the beta ARV of a
    fresh, zero-state pass over its input.
    """

    def __init__(self, fs=1000.0, f_center=None, bandwidth=8.0, order=4, ripple_db=1.0, kind="cheby1",
                 arv_window=0.1):
        self.fs = fs
        self.f_center = f_center
        self.bandwidth = bandwidth
        self.order = order
        self.ripple_db = ripple_db
        self.kind = kind
        self.arv_window = arv_window

    def _series(self, x):
        if isinstance(x, TimeSeries):
            if x.fs != self.fs:
                raise ValueError(f"signal fs {x.fs} differs from the estimator fs {self.fs}")
            return x
        x = np.asarray(x, dtype=float)
        if x.ndim == 2 and x.shape[1] == 1:
            x = x[:, 0]
        if x.ndim != 1:
            raise ValueError(f"expected a single-channel signal, got shape {x.shape}")
        return TimeSeries(x, self.fs)

    def fit(self, x, y=None):
        x = self._series(x)
        peak = self.f_center if self.f_center is not None else estimate_beta_peak(x)
        self.peak_hz_ = float(peak)
        self.coeffs_ = design_beta_bandpass(self.fs, self.peak_hz_, self.bandwidth, self.order, self.ripple_db,
                                            self.kind)
        return self

    def chain(self) -> BetaChain:
        check_is_fitted(self, "coeffs_")
        return BetaChain(self.coeffs_, self.arv_window)

    def transform(self, x):
        x = self._series(x)
        _, arv = self.chain().process(x.samples)
        return arv


def decimate_mean(x, factor: int) -> np.ndarray:
    """Non-overlapping boxcar average; ``len(x)`` must be a multiple of ``factor``."""
    x = as_samples(x)
    if x.size % factor:
        raise ValueError(f"length {x.size} is not a multiple of {factor}")
    return x.reshape(-1, factor).mean(axis=1)
