import numpy as np
import pytest

from cldbs.timeseries import TimeSeries, as_samples


def test_basic_properties():
    x = TimeSeries([1, 2, 3, 4], 2.0, t0=1.0)
    assert len(x) == 4 and x.dt == 0.5 and x.duration == 2.0
    assert np.array_equal(x.times, [1.0, 1.5, 2.0, 2.5])


def test_read_only_copy():
    a = np.zeros(3)
    x = TimeSeries(a, 1.0)
    a[0] = 5
    assert x.samples[0] == 0
    with pytest.raises(ValueError):
        x.samples[0] = 1.0


@pytest.mark.parametrize("fs", [0.0, -1.0, np.inf, np.nan])
def test_bad_fs(fs):
    with pytest.raises(ValueError):
        TimeSeries([1.0], fs)


def test_non_finite():
    with pytest.raises(ValueError):
        TimeSeries([1.0, np.nan], 1.0)


def test_slice_time():
    x = TimeSeries(np.arange(10), 10.0)
    s = x.slice_time(0.2, 0.5)
    assert np.array_equal(s.samples, [2, 3, 4]) and s.t0 == pytest.approx(0.2)
    assert len(x.slice_time(0.35)) == 6
    assert len(x.slice_time(2.0)) == 0


def test_equality():
    a = TimeSeries([1.0, 2.0], 10.0)
    assert a == TimeSeries([1.0, 2.0], 10.0)
    assert a != TimeSeries([1.0, 2.0], 20.0)
    assert a != a.with_samples([1.0, 2.0], unit="mA")


def test_as_samples():
    assert as_samples(TimeSeries([1.0], 1.0)).tolist() == [1.0]
    assert as_samples([1, 2]).dtype == float
