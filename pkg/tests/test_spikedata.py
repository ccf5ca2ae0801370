"""Unit and property tests for spike-train containers, binning and SDF I/O."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spikeconn.spikedata import (
    FormatError,
    ParameterError,
    SpikeTrain,
    SpikeTrainSet,
    bin_spike_trains,
    dither_spike_train,
    from_time_arrays,
    mean_firing_rate,
    read_raster_csv,
    read_sdf,
    write_raster_csv,
    write_sdf,
)


def make_set(times_per_channel, duration, rate=1000.0):
    return from_time_arrays(times_per_channel, rate, duration)


# ---------------------------------------------------------------------------
# Containers
# ---------------------------------------------------------------------------

def test_duplicate_spikes_rejected():
    with pytest.raises(ParameterError):
        SpikeTrain(1, [3, 3, 5])


def test_unsorted_spikes_rejected():
    with pytest.raises(ParameterError):
        SpikeTrain(1, [5, 3])


def test_out_of_range_spike_rejected():
    with pytest.raises(ParameterError):
        make_set([[1, 11]], duration=10)


def test_channel_ids_must_be_consecutive():
    with pytest.raises(ParameterError):
        SpikeTrainSet((SpikeTrain(2, [1]),), 1000.0, 10)


# ---------------------------------------------------------------------------
# Binning
# ---------------------------------------------------------------------------

def test_binning_multistage_example():
    sts = make_set([[1, 2, 7]], duration=10)
    binned = bin_spike_trains(sts, bin_size=5, mode="multistage")
    assert binned.values.tolist() == [[2, 1]]


def test_binning_binary_example():
    sts = make_set([[1, 2, 7]], duration=10)
    binned = bin_spike_trains(sts, bin_size=5, mode="binary")
    assert binned.values.tolist() == [[1, 1]]


def test_binning_unit_binsize_is_indicator():
    times = [1, 4, 9, 10]
    sts = make_set([times], duration=10)
    binned = bin_spike_trains(sts, bin_size=1, mode="binary")
    indicator = np.zeros(10, dtype=int)
    indicator[np.array(times) - 1] = 1
    assert binned.values[0].tolist() == indicator.tolist()


def test_binning_partial_final_bin():
    sts = make_set([[7]], duration=7)
    binned = bin_spike_trains(sts, bin_size=3, mode="multistage")
    assert binned.values.tolist() == [[0, 0, 1]]


def test_binning_bad_bin_size():
    sts = make_set([[1]], duration=10)
    with pytest.raises(ParameterError):
        bin_spike_trains(sts, bin_size=0)
    with pytest.raises(ParameterError):
        bin_spike_trains(sts, bin_size=11)


@given(
    st.lists(st.integers(min_value=1, max_value=200), min_size=0, max_size=60, unique=True),
    st.integers(min_value=1, max_value=200),
)
@settings(max_examples=60, deadline=None)
def test_binning_conservation_and_clamp(times, bin_size):
    sts = make_set([sorted(times)], duration=200)
    multi = bin_spike_trains(sts, bin_size, mode="multistage")
    binary = bin_spike_trains(sts, bin_size, mode="binary")
    assert multi.values.sum() == len(times)
    assert np.array_equal(binary.values[0], np.minimum(multi.values[0], 1))


# ---------------------------------------------------------------------------
# Mean firing rate
# ---------------------------------------------------------------------------

def test_mfr_one_hertz():
    train = SpikeTrain(1, np.arange(1, 61) * 1000)
    assert mean_firing_rate(train, 0, 60000, 1000.0) == pytest.approx(1.0)


def test_mfr_empty_train():
    assert mean_firing_rate(SpikeTrain(1, []), 0, 60000, 1000.0) == 0.0


def test_mfr_subwindow():
    # 150 spikes inside a 30 s sub-window of a longer recording -> 5 Hz
    inside = np.linspace(10001, 40000, 150).astype(np.int64)
    outside = np.array([50000, 55000])
    train = SpikeTrain(1, np.sort(np.concatenate([inside, outside])))
    assert mean_firing_rate(train, 10000, 40000, 1000.0) == pytest.approx(5.0)


def test_mfr_empty_interval_rejected():
    with pytest.raises(ParameterError):
        mean_firing_rate(SpikeTrain(1, [1]), 10, 10, 1000.0)


# ---------------------------------------------------------------------------
# Dithering
# ---------------------------------------------------------------------------

def test_dither_zero_window_is_identity():
    train = SpikeTrain(1, [2, 9, 40])
    out = dither_spike_train(train, 0, np.random.default_rng(0), 100)
    assert np.array_equal(out.times, train.times)


def test_dither_preserves_count_and_bound():
    rng = np.random.default_rng(7)
    times = np.sort(rng.choice(np.arange(1, 2001), size=300, replace=False))
    train = SpikeTrain(1, times)
    out = dither_spike_train(train, 4, np.random.default_rng(42), 2000)
    assert out.count == train.count
    assert np.unique(out.times).size == out.count
    # every output spike within +-2 samples of some input spike, bijectively
    idx = np.searchsorted(times, out.times)
    near = np.zeros(out.count, dtype=bool)
    for shift in (-2, -1, 0):
        cand = np.clip(idx + shift, 0, times.size - 1)
        near |= np.abs(times[cand] - out.times) <= 2
    assert near.all()


def test_dither_burst_collisions_resolved():
    # adjacent spikes force collisions; count must survive
    train = SpikeTrain(1, np.arange(10, 40))
    out = dither_spike_train(train, 2, np.random.default_rng(3), 100)
    assert out.count == 30
    assert np.unique(out.times).size == 30


def test_dither_deterministic_per_seed():
    train = SpikeTrain(1, np.arange(5, 500, 7))
    a = dither_spike_train(train, 10, np.random.default_rng(11), 600)
    b = dither_spike_train(train, 10, np.random.default_rng(11), 600)
    assert np.array_equal(a.times, b.times)


# ---------------------------------------------------------------------------
# SDF file round trips
# ---------------------------------------------------------------------------

def test_sdf_roundtrip(tmp_path):
    sts = make_set([[1, 5, 9], [], [10]], duration=10)
    path = tmp_path / "spikes.sdf.json"
    write_sdf(sts, path)
    back = read_sdf(path)
    assert back.sampling_rate == sts.sampling_rate
    assert back.duration_samples == sts.duration_samples
    assert back.channel_count == 3
    for a, b in zip(back.trains, sts.trains):
        assert np.array_equal(a.times, b.times)


def test_sdf_channel_count_mismatch(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(
        '{"sampling_rate_hz": 1000, "duration_samples": 10, '
        '"channel_count": 3, "trains": [[1], [2]]}'
    )
    with pytest.raises(FormatError, match="channel_count"):
        read_sdf(path)


def test_sdf_out_of_range_time(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(
        '{"sampling_rate_hz": 1000, "duration_samples": 10, '
        '"channel_count": 1, "trains": [[11]]}'
    )
    with pytest.raises(FormatError, match="trains"):
        read_sdf(path)


def test_sdf_missing_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"duration_samples": 10, "channel_count": 0, "trains": []}')
    with pytest.raises(FormatError, match="sampling_rate_hz"):
        read_sdf(path)


@given(
    st.lists(
        st.lists(st.integers(min_value=1, max_value=5000), max_size=80, unique=True),
        min_size=1,
        max_size=5,
    )
)
@settings(max_examples=40, deadline=None)
def test_sdf_roundtrip_property(tmp_path_factory, channels):
    sts = make_set([sorted(c) for c in channels], duration=5000)
    path = tmp_path_factory.mktemp("sdf") / "set.json"
    write_sdf(sts, path)
    back = read_sdf(path)
    assert back.duration_samples == sts.duration_samples
    for a, b in zip(back.trains, sts.trains):
        assert np.array_equal(a.times, b.times)


def test_raster_csv_roundtrip(tmp_path):
    sts = make_set([[3, 4], [], [1, 999]], duration=1000)
    path = tmp_path / "raster.csv"
    write_raster_csv(sts, path)
    back = read_raster_csv(path, channel_count=3, duration_samples=1000)
    for a, b in zip(back.trains, sts.trains):
        assert np.array_equal(a.times, b.times)


def test_truncated_set():
    sts = make_set([[1, 5, 9], [10]], duration=10)
    cut = sts.truncated(5)
    assert cut.duration_samples == 5
    assert cut.spike_times(1).tolist() == [1, 5]
    assert cut.spike_times(2).tolist() == []
