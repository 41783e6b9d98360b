from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled real-valued signal.

    ``samples`` is stored as a read-only float64 array. ``t0`` is the time of
    the first sample in seconds.
    """

    samples: np.ndarray
    fs: float
    t0: float = 0.0
    unit: str = "uV"

    def __post_init__(self):
        x = np.array(self.samples, dtype=float, copy=True).ravel()
        if not (np.isfinite(self.fs) and self.fs > 0):
            raise ValueError(f"fs must be positive, got {self.fs!r}")
        if not np.all(np.isfinite(x)):
            raise ValueError("TimeSeries samples must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "fs", float(self.fs))
        object.__setattr__(self, "t0", float(self.t0))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def dt(self) -> float:
        return 1.0 / self.fs

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.fs

    def with_samples(self, samples, unit: str | None = None) -> "TimeSeries":
        return TimeSeries(samples, self.fs, self.t0, self.unit if unit is None else unit)

    def slice_time(self, start: float, stop: float | None = None) -> "TimeSeries":
        """Samples with ``start <= t < stop``, times relative to this series' origin."""
        i0 = max(0, int(np.ceil((start - self.t0) * self.fs - 1e-9)))
        i1 = self.samples.size if stop is None else int(np.ceil((stop - self.t0) * self.fs - 1e-9))
        i1 = min(max(i1, i0), self.samples.size)
        return TimeSeries(self.samples[i0:i1], self.fs, self.t0 + i0 / self.fs, self.unit)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.fs == other.fs
            and self.t0 == other.t0
            and self.unit == other.unit
            and np.array_equal(self.samples, other.samples)
        )

    __hash__ = None


def as_samples(x) -> np.ndarray:
    """Return the float array behind a TimeSeries or array-like."""
    if isinstance(x, TimeSeries):
        return x.samples
    return np.asarray(x, dtype=float)
