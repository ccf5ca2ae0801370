"""Core spike-train containers, binning, jitter surrogates and file I/O.

Time is discrete throughout the package: a recording of ``duration_samples``
samples at ``sampling_rate`` Hz holds spike events at integer sample indices
in ``[1, duration_samples]``.  The default rate is 1 kHz, so one sample is
one millisecond and all delays downstream are expressed in samples/bins.

Two on-disk formats are supported.  The canonical one is SDF-JSON, a single
JSON object::

    {
      "sampling_rate_hz": 1000.0,
      "duration_samples": 60000,
      "channel_count": 2,
      "trains": [[12, 40, 59993], [7, 8]]
    }

The alternative is a CSV raster with header ``channel,time_sample`` and one
row per spike; it does not carry the recording metadata, which must be given
when reading it back.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ParameterError",
    "FormatError",
    "SpikeTrain",
    "SpikeTrainSet",
    "BinnedMatrix",
    "bin_spike_trains",
    "mean_firing_rate",
    "dither_spike_train",
    "dither_set",
    "read_sdf",
    "write_sdf",
    "read_raster_csv",
    "write_raster_csv",
]

DEFAULT_SAMPLING_RATE = 1000.0


class ParameterError(ValueError):
    """An operation was called with arguments outside its contract."""


class FormatError(ValueError):
    """A file failed validation; the message names the offending field."""


@dataclass(frozen=True)
class SpikeTrain:
    """Sorted spike sample times (1-based, duplicate-free) of one channel."""

    channel_id: int
    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.int64)
        object.__setattr__(self, "times", t)
        if t.ndim != 1:
            raise ParameterError("spike times must be a 1-D sequence")
        if t.size and np.any(np.diff(t) <= 0):
            raise ParameterError(
                f"channel {self.channel_id}: times must be strictly increasing "
                "(duplicates at the same sample are forbidden)"
            )
        if t.size and t[0] < 1:
            raise ParameterError(f"channel {self.channel_id}: times must be >= 1")
        t.setflags(write=False)

    @property
    def count(self) -> int:
        return int(self.times.size)


@dataclass(frozen=True)
class SpikeTrainSet:
    """A multichannel recording: one SpikeTrain per channel plus time base."""

    trains: tuple[SpikeTrain, ...]
    sampling_rate: float
    duration_samples: int

    def __post_init__(self):
        object.__setattr__(self, "trains", tuple(self.trains))
        if self.duration_samples <= 0:
            raise ParameterError("duration_samples must be > 0")
        if self.sampling_rate <= 0:
            raise ParameterError("sampling_rate must be > 0")
        for expected, train in enumerate(self.trains, start=1):
            if train.channel_id != expected:
                raise ParameterError(
                    f"channel ids must be 1..{len(self.trains)} in order, "
                    f"found {train.channel_id} at position {expected}"
                )
            if train.times.size and train.times[-1] > self.duration_samples:
                raise ParameterError(
                    f"channel {train.channel_id}: spike at sample "
                    f"{int(train.times[-1])} exceeds duration "
                    f"{self.duration_samples}"
                )

    @property
    def channel_count(self) -> int:
        return len(self.trains)

    @property
    def duration_seconds(self) -> float:
        return self.duration_samples / self.sampling_rate

    def spike_times(self, channel_id: int) -> np.ndarray:
        return self.trains[channel_id - 1].times

    def truncated(self, duration_samples: int) -> "SpikeTrainSet":
        """Restrict the recording to its first ``duration_samples`` samples."""
        if not 1 <= duration_samples <= self.duration_samples:
            raise ParameterError("truncation length outside recording")
        trains = tuple(
            SpikeTrain(t.channel_id, t.times[t.times <= duration_samples])
            for t in self.trains
        )
        return SpikeTrainSet(trains, self.sampling_rate, duration_samples)


def from_time_arrays(times_per_channel, sampling_rate, duration_samples) -> SpikeTrainSet:
    """Build a SpikeTrainSet from a list of per-channel sample-time arrays."""
    trains = tuple(
        SpikeTrain(i + 1, np.asarray(t, dtype=np.int64))
        for i, t in enumerate(times_per_channel)
    )
    return SpikeTrainSet(trains, sampling_rate, duration_samples)


@dataclass(frozen=True)
class BinnedMatrix:
    """channel x bin spike counts; binary mode clamps each count to 0/1."""

    values: np.ndarray
    bin_size: int
    mode: str

    def __post_init__(self):
        if self.mode not in ("binary", "multistage"):
            raise ParameterError(f"unknown binning mode {self.mode!r}")

    @property
    def bin_count(self) -> int:
        return self.values.shape[1]


def bin_spike_trains(spike_set: SpikeTrainSet, bin_size: int, mode: str = "binary") -> BinnedMatrix:
    """Partition every train into fixed windows of ``bin_size`` samples.

    Bin ``b`` (1-based) covers samples ``[(b-1)*bin_size + 1, b*bin_size]``;
    a final partial bin is included.  ``multistage`` keeps the raw spike
    count per bin, ``binary`` clamps it to {0, 1}.
    """
    if mode not in ("binary", "multistage"):
        raise ParameterError(f"unknown binning mode {mode!r}")
    if not 1 <= bin_size <= spike_set.duration_samples:
        raise ParameterError(
            f"bin_size must be in [1, {spike_set.duration_samples}], got {bin_size}"
        )
    n_bins = -(-spike_set.duration_samples // bin_size)
    dtype = np.uint8 if mode == "binary" else np.int64
    out = np.zeros((spike_set.channel_count, n_bins), dtype=dtype)
    for row, train in enumerate(spike_set.trains):
        if not train.times.size:
            continue
        bins = (train.times - 1) // bin_size
        counts = np.bincount(bins, minlength=n_bins)
        if mode == "binary":
            out[row] = counts.astype(bool)
        else:
            out[row] = counts
    return BinnedMatrix(out, bin_size, mode)


def mean_firing_rate(train: SpikeTrain, t_start: int, t_end: int, sampling_rate: float) -> float:
    """Spikes with ``t_start <= t <= t_end`` divided by the window length in s."""
    if t_end <= t_start:
        raise ParameterError(f"empty interval [{t_start}, {t_end}]")
    if t_start < 0:
        raise ParameterError("t_start must be >= 0")
    count = int(np.searchsorted(train.times, t_end, side="right")
                - np.searchsorted(train.times, t_start, side="left"))
    return count / ((t_end - t_start) / sampling_rate)


def dither_spike_train(
    train: SpikeTrain,
    window: int,
    rng: np.random.Generator,
    duration_samples: int,
) -> SpikeTrain:
    """Displace every spike by an independent uniform offset within ``window``.

    Offsets are integers in ``[-window//2, +window//2]``; displaced spikes are
    clipped to ``[1, duration_samples]`` and the result is re-sorted, so close
    spikes may switch order.  The spike count is always preserved: when two
    displaced spikes collide on one sample the offset is re-drawn (at most 100
    times), after which the spike is nudged to the nearest free sample.
    """
    if window < 0:
        raise ParameterError("window must be >= 0")
    if train.times.size and train.times[-1] > duration_samples:
        raise ParameterError("train exceeds stated duration")
    half = window // 2
    if half == 0 or train.times.size == 0:
        return SpikeTrain(train.channel_id, train.times.copy())
    occupied = set()
    placed = np.empty(train.times.size, dtype=np.int64)
    for i, t in enumerate(train.times):
        pos = None
        for _ in range(100):
            candidate = int(np.clip(t + rng.integers(-half, half + 1), 1, duration_samples))
            if candidate not in occupied:
                pos = candidate
                break
        if pos is None:
            pos = _nearest_free(int(t), occupied, duration_samples)
        occupied.add(pos)
        placed[i] = pos
    placed.sort()
    return SpikeTrain(train.channel_id, placed)


def _nearest_free(center: int, occupied: set, duration_samples: int) -> int:
    for radius in range(1, duration_samples + 1):
        for pos in (center - radius, center + radius):
            if 1 <= pos <= duration_samples and pos not in occupied:
                return pos
    raise ParameterError("no free sample for dithered spike")  # train denser than duration


def dither_set(
    spike_set: SpikeTrainSet, window: int, rng: np.random.Generator
) -> SpikeTrainSet:
    """Dither every channel of a set with the shared generator."""
    trains = tuple(
        dither_spike_train(t, window, rng, spike_set.duration_samples)
        for t in spike_set.trains
    )
    return SpikeTrainSet(trains, spike_set.sampling_rate, spike_set.duration_samples)


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def write_sdf(spike_set: SpikeTrainSet, path) -> None:
    """Write a SpikeTrainSet to SDF-JSON (lossless, integer timestamps)."""
    payload = {
        "sampling_rate_hz": spike_set.sampling_rate,
        "duration_samples": spike_set.duration_samples,
        "channel_count": spike_set.channel_count,
        "trains": [train.times.tolist() for train in spike_set.trains],
    }
    Path(path).write_text(json.dumps(payload))


def read_sdf(path) -> SpikeTrainSet:
    """Read and validate an SDF-JSON file (inverse of :func:`write_sdf`)."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise FormatError("top level: expected a JSON object")
    for key, kind in (
        ("sampling_rate_hz", (int, float)),
        ("duration_samples", int),
        ("channel_count", int),
        ("trains", list),
    ):
        if key not in raw:
            raise FormatError(f"{key}: missing required field")
        if not isinstance(raw[key], kind) or isinstance(raw[key], bool):
            raise FormatError(f"{key}: expected {kind[0].__name__ if isinstance(kind, tuple) else kind.__name__}")
    if raw["duration_samples"] <= 0:
        raise FormatError("duration_samples: must be > 0")
    if raw["sampling_rate_hz"] <= 0:
        raise FormatError("sampling_rate_hz: must be > 0")
    if raw["channel_count"] != len(raw["trains"]):
        raise FormatError(
            f"channel_count: declared {raw['channel_count']} channels but "
            f"file contains {len(raw['trains'])} train arrays"
        )
    trains = []
    for idx, times in enumerate(raw["trains"], start=1):
        if not isinstance(times, list):
            raise FormatError(f"trains[{idx}]: expected an array of sample times")
        arr = np.asarray(times, dtype=np.int64)
        if arr.size:
            if not all(isinstance(t, int) for t in times):
                raise FormatError(f"trains[{idx}]: sample times must be integers")
            if arr[0] < 1 or arr[-1] > raw["duration_samples"]:
                raise FormatError(
                    f"trains[{idx}]: sample times must lie in "
                    f"[1, {raw['duration_samples']}]"
                )
            if np.any(np.diff(arr) <= 0):
                raise FormatError(f"trains[{idx}]: sample times must be ascending and duplicate-free")
        trains.append(SpikeTrain(idx, arr))
    return SpikeTrainSet(tuple(trains), float(raw["sampling_rate_hz"]), raw["duration_samples"])


def write_raster_csv(spike_set: SpikeTrainSet, path) -> None:
    """Write the set as a ``channel,time_sample`` raster (no metadata)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["channel", "time_sample"])
        for train in spike_set.trains:
            for t in train.times:
                writer.writerow([train.channel_id, int(t)])


def read_raster_csv(path, channel_count, duration_samples, sampling_rate=DEFAULT_SAMPLING_RATE) -> SpikeTrainSet:
    """Read a raster CSV; metadata is not in the file and must be supplied."""
    per_channel = [[] for _ in range(channel_count)]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["channel", "time_sample"]:
            raise FormatError("header: expected 'channel,time_sample'")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise FormatError(f"line {line_no}: expected two columns")
            try:
                channel, t = int(row[0]), int(row[1])
            except ValueError as exc:
                raise FormatError(f"line {line_no}: non-integer value") from exc
            if not 1 <= channel <= channel_count:
                raise FormatError(f"line {line_no}: channel {channel} out of range")
            per_channel[channel - 1].append(t)
    trains = tuple(
        SpikeTrain(i + 1, np.sort(np.asarray(t, dtype=np.int64)))
        for i, t in enumerate(per_channel)
    )
    return SpikeTrainSet(trains, sampling_rate, duration_samples)
