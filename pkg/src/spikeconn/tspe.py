"""Edge-filter-bank connectivity estimation over cross-correlograms.

A synapse leaves a local bump (excitatory) or dip (inhibitory) in the
pairwise cross-correlogram at its transmission delay.  Convolving the
correlogram with a zero-mean edge filter - a positive observation window of
width b flanked by negative surrounds of width a, optionally separated by
crossover gaps of width c - turns that structure into a signed peak.  A bank
of filters over several (a, b, c) combinations covers multiple time scales;
each filter's output is smoothed with a matching running-total filter of
width b, all rows are truncated to their common valid length and summed.
The value of the summed curve at its absolute extremum, with its sign,
estimates the synaptic effect, and the extremum's delay estimates the
transmission time.

By default the correlograms are z-score normalized without mean
subtraction; the exact mean-subtracted form is available through
``mean_subtract=True`` and changes accuracy only marginally on long
recordings.  The optional per-delay normalization divides each delay slice
by the sum over all ordered off-diagonal pairs, damping global network-burst
structure; it is applied to the correlogram tensor before filtering.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .estimators import ConnectivityMatrix, DelayFunction, event_bins, ncc_delay_tensor
from .spikedata import ParameterError, SpikeTrainSet

__all__ = [
    "EdgeFilter",
    "RunningTotalFilter",
    "TspeResult",
    "DEFAULT_A_LIST",
    "DEFAULT_B_LIST",
    "DEFAULT_C_LIST",
    "build_edge_filter",
    "build_running_total_filter",
    "spe",
    "normalize_spe",
    "tspe",
]

DEFAULT_A_LIST = (3, 4, 5, 6, 7, 8)   # surround windows
DEFAULT_B_LIST = (2, 3, 4, 5, 6)      # observed windows
DEFAULT_C_LIST = (0,)                 # crossover gaps
DEFAULT_D_MAX = 25


@dataclass(frozen=True)
class EdgeFilter:
    """Zero-mean taps: -1/a on the surrounds, +2/b on the observed window."""

    a: int
    b: int
    c: int
    taps: np.ndarray

    @property
    def length(self) -> int:
        return 2 * self.a + self.b + 2 * self.c


@dataclass(frozen=True)
class RunningTotalFilter:
    b: int
    taps: np.ndarray


def build_edge_filter(a: int, b: int, c: int = 0) -> EdgeFilter:
    """Construct the (a, b, c) edge filter; its taps always sum to zero."""
    if a < 1 or b < 1:
        raise ParameterError("edge filter needs a >= 1 and b >= 1")
    if c < 0:
        raise ParameterError("crossover gap c must be >= 0")
    taps = np.concatenate([
        np.full(a, -1.0 / a),
        np.zeros(c),
        np.full(b, 2.0 / b),
        np.zeros(c),
        np.full(a, -1.0 / a),
    ])
    return EdgeFilter(a, b, c, taps)


def build_running_total_filter(b: int) -> RunningTotalFilter:
    if b < 1:
        raise ParameterError("running total filter needs b >= 1")
    return RunningTotalFilter(b, np.ones(b))


def spe(ncc: DelayFunction, edge_filter: EdgeFilter) -> DelayFunction:
    """Valid-mode convolution of a correlogram with one edge filter.

    The output value at delay d aligns the filter so its observed window
    starts at d; the correlogram must extend at least a + c bins to the left
    of the first output delay.
    """
    L = edge_filter.length
    if ncc.values.size < L:
        raise ParameterError(
            f"delay range too short: filter needs {L} points, "
            f"margin a+c = {edge_filter.a + edge_filter.c} to the left"
        )
    out = np.convolve(ncc.values, edge_filter.taps, mode="valid")
    start = ncc.delays[0] + edge_filter.a + edge_filter.c
    delays = np.arange(start, start + out.size)
    return DelayFunction(ncc.source, ncc.target, delays, out, "SPE", ncc.degenerate)


def normalize_spe(values: np.ndarray, flag_norm: bool = True):
    """Per-delay division by the sum over all off-diagonal ordered pairs.

    ``values`` has shape (n_delays, K, K).  Delays whose pair sum is below
    1e-12 in magnitude are left unnormalized and reported in the returned
    skip list.  With the flag off this is the identity.
    """
    if values.ndim != 3 or values.shape[1] != values.shape[2]:
        raise ParameterError("expected a (n_delays, K, K) tensor")
    if not flag_norm:
        return values, []
    k = values.shape[1]
    off = ~np.eye(k, dtype=bool)
    sums = values[:, off].sum(axis=1)
    skipped = np.flatnonzero(np.abs(sums) < 1e-12)
    divisors = np.where(np.abs(sums) < 1e-12, 1.0, sums)
    out = values / divisors[:, None, None]
    if skipped.size:
        warnings.warn(
            f"{skipped.size} delay slices had near-zero pair sums; left unnormalized",
            stacklevel=2,
        )
    return out, skipped.tolist()


@dataclass(frozen=True)
class TspeResult:
    """Signed connectivity matrix and delay estimates of the filter bank."""

    cm: np.ndarray
    dm: np.ndarray
    params: dict = field(default_factory=dict)
    flags: tuple = ()

    def to_connectivity_matrix(self) -> ConnectivityMatrix:
        return ConnectivityMatrix(self.cm, "TSPE", self.params, self.dm, self.flags)


def _bank(a_list, b_list, c_list):
    for a in a_list:
        for c in c_list:
            for b in b_list:
                yield a, b, c


def tspe_from_tensor(
    tensor: np.ndarray,
    grid_start: int,
    d_max: int,
    a_list=DEFAULT_A_LIST,
    b_list=DEFAULT_B_LIST,
    c_list=DEFAULT_C_LIST,
) -> np.ndarray:
    """Apply the filter bank to a correlogram tensor (n_delays, K, K).

    Returns the summed bank output over delays 1..m with m the common valid
    length; ``grid_start`` is the delay of the tensor's first slice.
    """
    max_a, max_c = max(a_list), max(c_list)
    if grid_start > 1 - max_a - max_c:
        raise ParameterError(
            f"correlogram grid must start at or before {1 - max_a - max_c}"
        )
    n_delays = tensor.shape[0]
    k = tensor.shape[1]
    m = None
    acc = np.zeros((n_delays + max(b_list), k, k))
    for a, b, c in _bank(a_list, b_list, c_list):
        filt = build_edge_filter(a, b, c)
        seg_from = (1 - a - c) - grid_start
        seg = tensor[seg_from:]
        n_seg = seg.shape[0]
        L = filt.length
        if n_seg < L:
            raise ParameterError(
                f"delay range too short for filter (a={a}, b={b}, c={c}): "
                f"needs {L} points beyond delay {1 - a - c}"
            )
        n1 = n_seg - L + 1
        out1 = np.zeros((n1, k, k))
        for j, tap in enumerate(filt.taps):
            if tap != 0.0:
                out1 += tap * seg[j:j + n1]
        # running total, 'full' mode: windowed cumulative sums
        cs = np.cumsum(out1, axis=0)
        n2 = n1 + b - 1
        out2 = np.empty((n2, k, k))
        for j in range(n2):
            hi = min(j, n1 - 1)
            lo = j - b  # exclusive
            out2[j] = cs[hi] - (cs[lo] if lo >= 0 else 0.0)
        acc[:n2] += out2
        m = n2 if m is None else min(m, n2)
    if m is None or m < 1:
        raise ParameterError("empty filter bank or no valid output length")
    return acc[:m]


def tspe(
    spike_set: SpikeTrainSet,
    d_max: int = DEFAULT_D_MAX,
    a_list=DEFAULT_A_LIST,
    b_list=DEFAULT_B_LIST,
    c_list=DEFAULT_C_LIST,
    flag_norm: bool = False,
    bin_size: int = 1,
    mean_subtract: bool = False,
) -> TspeResult:
    """Full pipeline: correlograms, filter bank, signed extremum extraction.

    ``cm[i, j]`` holds the summed bank value at the absolute extremum for
    the ordered pair i -> j (positive: excitatory, negative: inhibitory);
    ``dm[i, j]`` its delay in bins (ties resolved to the smallest delay, 0
    where no estimate exists).  Diagonals are zero: self-connections are
    outside the method's reach.
    """
    if spike_set.channel_count < 2:
        raise ParameterError("need at least two channels")
    if d_max < 1:
        raise ParameterError("d_max must be >= 1")
    if not a_list or not b_list or not c_list:
        raise ParameterError("filter bank lists must be non-empty")
    max_a, max_c = max(a_list), max(c_list)
    if d_max - max_c < 1:
        raise ParameterError("d_max too small for the crossover gaps")
    events, n_bins = event_bins(spike_set, bin_size)
    grid_start = 1 - max_a - max_c
    grid_stop = d_max + max_a
    _delays, tensor, _sd, silent = ncc_delay_tensor(
        events, n_bins, grid_start, grid_stop, mean_subtract=mean_subtract
    )
    flags = tuple(f"silent channel {int(i) + 1}" for i in silent)
    tensor, skipped = normalize_spe(tensor, flag_norm)
    if skipped:
        flags = flags + (f"{len(skipped)} unnormalized delay slices",)
    summed = tspe_from_tensor(tensor, grid_start, d_max, a_list, b_list, c_list)
    idx = np.argmax(np.abs(summed), axis=0)           # first maximum: smallest delay
    cm = np.take_along_axis(summed, idx[None], axis=0)[0]
    dm = idx.astype(np.int64) + 1
    np.fill_diagonal(cm, 0.0)
    dm[cm == 0.0] = 0
    k = spike_set.channel_count
    if silent.size:
        cm[silent, :] = 0.0
        cm[:, silent] = 0.0
        dm[silent, :] = 0
        dm[:, silent] = 0
        warnings.warn(f"{silent.size} silent channels zeroed in TSPE output",
                      stacklevel=2)
    params = {
        "d_max": d_max,
        "a_list": list(a_list),
        "b_list": list(b_list),
        "c_list": list(c_list),
        "flag_norm": flag_norm,
        "bin_size": bin_size,
        "mean_subtract": mean_subtract,
    }
    return TspeResult(cm, dm, params, flags)
