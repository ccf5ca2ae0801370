"""Pairwise connectivity estimators over binned spike trains.

All estimators share one delay convention: for an ordered pair (source X,
target Y) a positive delay d compares source activity at bin i-d with target
activity at bin i, so a synapse X -> Y with transmission time d produces a
feature at +d.  Delay functions are reduced to a connectivity matrix with
rows as sources and columns as targets and a zero diagonal.

Three cross-correlogram normalizations are available: raw coincidence
counts, the geometric-mean-of-spike-counts histogram, and the z-scored
correlogram (means subtracted, divided by sigma_x * sigma_y * N with N the
full recording length in bins; sums run over the overlap of the shifted
trains).  The transfer-entropy family is the plug-in estimator over binary
pattern words: target future bit, k target history bits and l source history
bits taken at source delay d.  Everything here is deterministic; heavy
sweeps are batched through sparse matrix products and an event-walking
kernel rather than dense per-pair scans.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _fast
from .spikedata import ParameterError, SpikeTrainSet

__all__ = [
    "DelayFunction",
    "TeParams",
    "ConnectivityMatrix",
    "METHODS",
    "cross_correlogram",
    "coincidence_index",
    "delayed_mutual_information",
    "delayed_transfer_entropy",
    "cdhote",
    "estimate_cm",
    "ncc_delay_tensor",
    "event_bins",
    "write_cm",
    "read_cm",
]

METHODS = ("NCC", "NCCCI", "MI", "D1TE", "DTE", "DTECI", "DHOTE", "DHOTECI", "CDHOTE")

DEFAULT_D_MAX = 25
DEFAULT_TAU = 4


@dataclass(frozen=True)
class DelayFunction:
    """One pair's estimator values over a contiguous integer delay range."""

    source: int
    target: int
    delays: np.ndarray
    values: np.ndarray
    method: str
    degenerate: bool = False

    def peak_delay(self, rectify: bool = True) -> int:
        f = np.abs(self.values) if rectify else self.values
        return int(self.delays[int(np.argmax(f))])


@dataclass(frozen=True)
class TeParams:
    k: int = 1
    l: int = 1
    d_max: int = DEFAULT_D_MAX
    bin_size: int = 1

    def __post_init__(self):
        if not (1 <= self.k <= 5 and 1 <= self.l <= 5):
            raise ParameterError("history orders k, l must be in [1, 5]")
        if self.d_max < 1:
            raise ParameterError("d_max must be >= 1")
        if self.bin_size < 1:
            raise ParameterError("bin_size must be >= 1")


@dataclass(frozen=True)
class ConnectivityMatrix:
    """K x K estimation result, rows = sources, diagonal fixed to zero."""

    values: np.ndarray
    method: str
    params: dict = field(default_factory=dict)
    delay_estimates: np.ndarray | None = None
    flags: tuple = ()

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ParameterError("connectivity matrix must be square")
        if np.any(np.diag(v) != 0):
            raise ParameterError("connectivity matrix diagonal must be zero")

    @property
    def k(self) -> int:
        return self.values.shape[0]


# ---------------------------------------------------------------------------
# Event helpers
# ---------------------------------------------------------------------------

def event_bins(spike_set: SpikeTrainSet, bin_size: int = 1):
    """0-based binary bin indices per channel plus the bin count."""
    n_bins = -(-spike_set.duration_samples // bin_size)
    events = [
        np.unique((t.times - 1) // bin_size).astype(np.int64)
        for t in spike_set.trains
    ]
    return events, n_bins


def _binary_events(x) -> np.ndarray:
    x = np.asarray(x)
    return np.flatnonzero(x != 0).astype(np.int64)


def _member(values, sorted_events):
    idx = np.searchsorted(sorted_events, values)
    idx = np.minimum(idx, max(sorted_events.size - 1, 0))
    if sorted_events.size == 0:
        return np.zeros(values.shape, dtype=np.int64)
    return (sorted_events[idx] == values).astype(np.int64)


# ---------------------------------------------------------------------------
# Cross-correlograms
# ---------------------------------------------------------------------------

def _cc_nonneg(x, y, d, normalization):
    """Correlogram value at one delay d >= 0 (source x, target y)."""
    T = x.size
    if d >= T:
        return 0.0, False
    xs = x[: T - d].astype(np.float64)
    ys = y[d:].astype(np.float64)
    if normalization == "raw":
        return float(xs @ ys), False
    if normalization == "geometric":
        n_x, n_y = np.count_nonzero(x), np.count_nonzero(y)
        if n_x == 0 or n_y == 0:
            return 0.0, True
        return float((xs @ ys) / np.sqrt(n_x * n_y)), False
    mx, my = x.mean(), y.mean()
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        return 0.0, True
    return float(((xs - mx) @ (ys - my)) / (sx * sy * T)), False


def cross_correlogram(x, y, d_range, normalization: str = "zscore") -> DelayFunction:
    """Correlogram of one ordered pair over ``d_range = (d_lo, d_hi)``.

    Negative delays are evaluated through the exact mirror identity
    CC_XY(-d) = CC_YX(d), so the two directions of a pair are bitwise
    consistent.  Silent channels make the z-scored value undefined; the
    result is then all zeros with the ``degenerate`` flag set.
    """
    if normalization not in ("raw", "geometric", "zscore"):
        raise ParameterError(f"unknown normalization {normalization!r}")
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise ParameterError("trains must be equal-length 1-D arrays")
    d_lo, d_hi = int(d_range[0]), int(d_range[1])
    if d_lo > d_hi:
        raise ParameterError("empty delay range")
    delays = np.arange(d_lo, d_hi + 1)
    values = np.zeros(delays.size)
    degenerate = False
    for i, d in enumerate(delays):
        if d >= 0:
            values[i], bad = _cc_nonneg(x, y, int(d), normalization)
        else:
            values[i], bad = _cc_nonneg(y, x, int(-d), normalization)
        degenerate |= bad
    if degenerate:
        warnings.warn("silent channel in correlogram; values set to 0", stacklevel=2)
    return DelayFunction(0, 0, delays, values, f"CC-{normalization}", degenerate)


def ncc_delay_tensor(
    events: list,
    n_bins: int,
    d_lo: int,
    d_hi: int,
    mean_subtract: bool = True,
):
    """Batched z-scored correlograms of all ordered pairs.

    Returns ``(delays, tensor, sd, silent)`` where ``tensor[di, s, t]`` is
    NCC of source s, target t at ``delays[di]``; rows/columns of silent
    channels are zero.  Built from one sparse product per displacement plus
    the mirror identity, so pair symmetry is exact.
    """
    if d_lo > d_hi:
        raise ParameterError("empty delay range")
    k = len(events)
    counts = np.array([e.size for e in events], dtype=np.int64)
    mu = counts / n_bins
    sd = np.sqrt(mu * (1.0 - mu))
    silent = sd == 0.0
    sd_safe = np.where(silent, 1.0, sd)
    rows = np.concatenate(events) if k else np.empty(0, np.int64)
    cols = np.repeat(np.arange(k), counts).astype(np.int64)
    order = np.argsort(rows, kind="stable")
    delays = np.arange(d_lo, d_hi + 1)
    tensor = np.zeros((delays.size, k, k))
    norm = np.outer(sd_safe, sd_safe) * n_bins
    max_abs = max(abs(d_lo), abs(d_hi))
    coincidences = np.zeros((min(max_abs, n_bins - 1) + 1, k, k))
    _fast.coincidence_tensor(
        rows[order], cols[order], coincidences.shape[0] - 1, k, coincidences
    )
    for d in range(0, max_abs + 1):
        if d >= n_bins:
            break
        if d > d_hi and -d < d_lo:
            continue
        corr = coincidences[d].copy()  # [source, target]
        if mean_subtract:
            low = np.array(
                [np.searchsorted(e, n_bins - d) for e in events], dtype=np.float64
            )  # events in [0, T-1-d]
            high = counts - np.array(
                [np.searchsorted(e, d) for e in events], dtype=np.float64
            )  # events in [d, T-1]
            corr = (
                corr
                - np.outer(low, mu)
                - np.outer(mu, high)
                + np.outer(mu, mu) * (n_bins - d)
            )
        corr = corr / norm
        if d_lo <= d <= d_hi:
            tensor[d - d_lo] = corr
        if d > 0 and d_lo <= -d <= d_hi:
            tensor[-d - d_lo] = corr.T
    if silent.any():
        tensor[:, silent, :] = 0.0
        tensor[:, :, silent] = 0.0
    return delays, tensor, sd, np.flatnonzero(silent)


# ---------------------------------------------------------------------------
# Coincidence index
# ---------------------------------------------------------------------------

def coincidence_index(f: DelayFunction, tau: int = DEFAULT_TAU, rectify: bool = False) -> float:
    """Mass of the delay function inside a tau-window around its peak.

    With ``rectify`` the function is replaced by its absolute values first
    (required whenever it can be negative).  A function with zero total mass
    is degenerate and yields 0.  Peak ties are broken toward the centre of
    the delay range, so a flat function integrates over a full (unclipped)
    window.
    """
    if tau < 0 or tau > (f.delays[-1] - f.delays[0]):
        raise ParameterError("tau must be within the delay-range width")
    values = np.abs(f.values) if rectify else f.values
    if not rectify and np.any(values < 0):
        raise ParameterError("rectify=True is required for signed delay functions")
    total = values.sum()
    if total == 0.0:
        warnings.warn("degenerate delay function: zero total mass", stacklevel=2)
        return 0.0
    peaks = np.flatnonzero(values == values.max())
    mid = (values.size - 1) / 2.0
    d_p = f.delays[peaks[int(np.argmin(np.abs(peaks - mid)))]]
    window = np.abs(f.delays - d_p) <= tau / 2.0 + 1e-12
    return float(values[window].sum() / total)


# ---------------------------------------------------------------------------
# Delayed mutual information
# ---------------------------------------------------------------------------

def _mi_pair_events(x_ev, y_ev, T, d) -> float:
    lo = max(0, d)
    hi = T - 1 + min(0, d)
    L = hi - lo + 1
    if L <= 0:
        raise ParameterError("zero-length overlap window")
    n_x = int(np.searchsorted(x_ev, hi - d, "right") - np.searchsorted(x_ev, lo - d))
    n_y = int(np.searchsorted(y_ev, hi, "right") - np.searchsorted(y_ev, lo))
    sel = y_ev[(y_ev >= lo) & (y_ev <= hi)]
    n11 = int(_member(sel - d, x_ev).sum())
    table = np.array(
        [[L - n_x - n_y + n11, n_y - n11], [n_x - n11, n11]], dtype=np.float64
    )
    px = np.array([L - n_x, n_x]) / L
    py = np.array([L - n_y, n_y]) / L
    mi = 0.0
    for a in range(2):
        for b in range(2):
            if table[a, b] > 0:
                p = table[a, b] / L
                mi += p * np.log2(p / (px[a] * py[b]))
    return mi


def delayed_mutual_information(x, y, d_range) -> DelayFunction:
    """Plug-in mutual information in bits between y(i) and x(i-d) per delay."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise ParameterError("trains must be equal-length 1-D arrays")
    d_lo, d_hi = int(d_range[0]), int(d_range[1])
    delays = np.arange(d_lo, d_hi + 1)
    x_ev, y_ev = _binary_events(x), _binary_events(y)
    values = np.array(
        [_mi_pair_events(x_ev, y_ev, x.size, int(d)) for d in delays]
    )
    return DelayFunction(0, 0, delays, values, "MI")


# ---------------------------------------------------------------------------
# Transfer entropy family
# ---------------------------------------------------------------------------

def _pattern_events(spike_bins: np.ndarray, T: int, order: int, future: bool):
    """Positions with a nonzero pattern word and the words themselves.

    The word packs ``order`` history bits ending at the position (most
    recent bit highest) plus, for targets, the next bin as an extra top bit.
    """
    if spike_bins.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    lo_off = -1 if future else 0
    cand = np.unique(
        (spike_bins[:, None] + np.arange(lo_off, order)[None, :]).ravel()
    )
    cand = cand[(cand >= 0) & (cand <= T - 2)]
    word = np.zeros(cand.size, dtype=np.int64)
    if future:
        word += _member(cand + 1, spike_bins) << order
    for j in range(order):
        word += _member(cand - j, spike_bins) << (order - 1 - j)
    keep = word != 0
    return cand[keep], word[keep]


def _te_event_table(events, T, k, l):
    """Flattened per-channel pattern events for the batched TE kernel."""
    pos_y, word_y, pos_x, word_x = [], [], [], []
    for ev in events:
        py, wy = _pattern_events(ev, T, k, future=True)
        px, wx = _pattern_events(ev, T, l, future=False)
        pos_y.append(py)
        word_y.append(wy)
        pos_x.append(px)
        word_x.append(wx)

    def flatten(chunks):
        indptr = np.zeros(len(chunks) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([c.size for c in chunks])
        flat = np.concatenate(chunks) if chunks else np.empty(0, np.int64)
        return flat, indptr

    ypf, yip = flatten(pos_y)
    ywf, _ = flatten(word_y)
    xpf, xip = flatten(pos_x)
    xwf, _ = flatten(word_x)
    return ypf, ywf, yip, xpf, xwf, xip


def _warn_if_undersampled(T, k, l):
    patterns = 2 ** (1 + k + l)
    if T < 50 * patterns:
        warnings.warn(
            f"only {T} samples for {patterns} patterns; plug-in TE will be biased",
            stacklevel=3,
        )


def delayed_transfer_entropy(x, y, params: TeParams) -> DelayFunction:
    """Plug-in transfer entropy source->target per delay in [1, d_max]."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise ParameterError("trains must be equal-length 1-D arrays")
    T = x.size
    _warn_if_undersampled(T, params.k, params.l)
    x_ev, y_ev = _binary_events(x), _binary_events(y)
    py, wy = _pattern_events(y_ev, T, params.k, future=True)
    px, wx = _pattern_events(x_ev, T, params.l, future=False)
    out = np.zeros(params.d_max)
    _fast.te_pair_delays(py, wy, px, wx, T, params.k, params.l, 1, params.d_max, out)
    return DelayFunction(0, 0, np.arange(1, params.d_max + 1), out, "TE")


def _te_tensor(events, T, k, l, d_lo, d_hi):
    ypf, ywf, yip, xpf, xwf, xip = _te_event_table(events, T, k, l)
    n_ch = len(events)
    values = np.zeros((n_ch, n_ch, d_hi - d_lo + 1))
    _fast.te_matrix(ypf, ywf, yip, xpf, xwf, xip, T, k, l, d_lo, d_hi, values)
    return values


# ---------------------------------------------------------------------------
# CDHOTE
# ---------------------------------------------------------------------------

def cdhote(dhote_cm: ConnectivityMatrix, dhoteci_cm: ConnectivityMatrix) -> ConnectivityMatrix:
    """Euclidean distance of each pair's (TE, CI) point to the best corner.

    The reference point M takes the maxima of both coordinates over all
    off-diagonal pairs; low distances mark likely connections.
    """
    a, b = dhote_cm.values, dhoteci_cm.values
    if a.shape != b.shape:
        raise ParameterError("input matrices must have the same shape")
    if a.size == 0 or a.shape[0] < 2:
        raise ParameterError("need at least a 2x2 pair matrix")
    off = ~np.eye(a.shape[0], dtype=bool)
    m1 = a[off].max()
    m2 = b[off].max()
    dist = np.sqrt((a - m1) ** 2 + (b - m2) ** 2)
    np.fill_diagonal(dist, 0.0)
    return ConnectivityMatrix(
        dist,
        "CDHOTE",
        dict(dhote_cm.params, reference_point=[float(m1), float(m2)],
             polarity="low_is_connection"),
        dhote_cm.delay_estimates,
        tuple(set(dhote_cm.flags) | set(dhoteci_cm.flags)),
    )


# ---------------------------------------------------------------------------
# Matrix-level driver
# ---------------------------------------------------------------------------

def _reduce_delay_tensor(values: np.ndarray, delays: np.ndarray):
    """Signed value at the absolute extremum per pair, plus its delay."""
    idx = np.argmax(np.abs(values), axis=2)
    picked = np.take_along_axis(values, idx[:, :, None], axis=2)[:, :, 0]
    return picked, delays[idx]


def _ci_matrix(values: np.ndarray, delays: np.ndarray, tau: int, rectify: bool):
    k = values.shape[0]
    out = np.zeros((k, k))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for s in range(k):
            for t in range(k):
                if s == t:
                    continue
                f = DelayFunction(s, t, delays, values[s, t], "tmp")
                out[s, t] = coincidence_index(f, tau, rectify)
    return out


def estimate_cm(
    spike_set: SpikeTrainSet,
    method: str,
    bin_size: int = 1,
    d_max: int = DEFAULT_D_MAX,
    tau: int = DEFAULT_TAU,
    te_k: int = 2,
    te_l: int = 2,
) -> ConnectivityMatrix:
    """Run one estimator over all ordered channel pairs of a recording.

    The delay sweep covers d in [1, d_max] bins; each pair's delay function
    is reduced to the signed value at its absolute peak (CI variants: the
    coincidence index, with the peak delay recorded).  The diagonal is
    forced to zero; silent channels yield zero rows/columns and are listed
    in ``flags``.
    """
    if method not in METHODS:
        raise ParameterError(f"unknown method {method!r}; expected one of {METHODS}")
    if spike_set.channel_count < 2:
        raise ParameterError("need at least two channels")
    events, n_bins = event_bins(spike_set, bin_size)
    k_ch = spike_set.channel_count
    params = {"bin_size": bin_size, "d_max": d_max}
    flags = ()
    delays = np.arange(1, d_max + 1)

    if method in ("NCC", "NCCCI"):
        delay_arr, tensor, _sd, silent_idx = ncc_delay_tensor(
            events, n_bins, 1, d_max, mean_subtract=True
        )
        tensor = np.moveaxis(tensor, 0, 2)  # [src, tgt, delay]
        if silent_idx.size:
            flags = tuple(f"silent channel {int(i) + 1}" for i in silent_idx)
        if method == "NCC":
            cm, dm = _reduce_delay_tensor(tensor, delay_arr)
        else:
            cm = _ci_matrix(tensor, delay_arr, tau, rectify=True)
            dm = delay_arr[np.argmax(np.abs(tensor), axis=2)]
            params["tau"] = tau
    elif method == "MI":
        cm = np.zeros((k_ch, k_ch))
        dm = np.ones((k_ch, k_ch), dtype=np.int64)
        for s in range(k_ch):
            for t in range(k_ch):
                if s == t:
                    continue
                vals = np.array(
                    [_mi_pair_events(events[s], events[t], n_bins, d) for d in delays]
                )
                best = int(np.argmax(vals))
                cm[s, t] = vals[best]
                dm[s, t] = delays[best]
    elif method in ("D1TE", "DTE", "DTECI", "DHOTE", "DHOTECI", "CDHOTE"):
        if method in ("D1TE", "DTE", "DTECI"):
            k_hist = l_hist = 1
        else:
            k_hist, l_hist = te_k, te_l
        _warn_if_undersampled(n_bins, k_hist, l_hist)
        sweep_hi = 1 if method == "D1TE" else d_max
        tensor = _te_tensor(events, n_bins, k_hist, l_hist, 1, sweep_hi)
        sweep = np.arange(1, sweep_hi + 1)
        params.update({"k": k_hist, "l": l_hist})
        if method in ("D1TE", "DTE", "DHOTE"):
            cm, dm = _reduce_delay_tensor(tensor, sweep)
        elif method in ("DTECI", "DHOTECI"):
            cm = _ci_matrix(tensor, sweep, tau, rectify=False)
            dm = sweep[np.argmax(tensor, axis=2)]
            params["tau"] = tau
        else:  # CDHOTE
            peak, dm = _reduce_delay_tensor(tensor, sweep)
            ci = _ci_matrix(tensor, sweep, tau, rectify=False)
            params["tau"] = tau
            base = ConnectivityMatrix(peak, "DHOTE", params, dm)
            ci_cm = ConnectivityMatrix(ci, "DHOTECI", params, dm)
            return cdhote(base, ci_cm)
    np.fill_diagonal(cm, 0.0)
    np.fill_diagonal(dm, 0)
    return ConnectivityMatrix(cm, method, params, dm, flags)


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def write_cm(cm: ConnectivityMatrix, csv_path) -> None:
    """CSV matrix (row = source) plus JSON parameter sidecar and delay CSV."""
    csv_path = Path(csv_path)
    np.savetxt(csv_path, cm.values, fmt="%.17g", delimiter=",")
    sidecar = {
        "method": cm.method,
        "params": cm.params,
        "flags": list(cm.flags),
        "shape": list(cm.values.shape),
    }
    csv_path.with_suffix(".json").write_text(json.dumps(sidecar, sort_keys=True))
    if cm.delay_estimates is not None:
        np.savetxt(
            csv_path.with_name(csv_path.stem + "_delays.csv"),
            cm.delay_estimates,
            fmt="%d",
            delimiter=",",
        )


def read_cm(csv_path) -> ConnectivityMatrix:
    csv_path = Path(csv_path)
    values = np.loadtxt(csv_path, delimiter=",", ndmin=2)
    sidecar = json.loads(csv_path.with_suffix(".json").read_text())
    delays_path = csv_path.with_name(csv_path.stem + "_delays.csv")
    delay_estimates = None
    if delays_path.exists():
        delay_estimates = np.loadtxt(delays_path, delimiter=",", dtype=np.int64, ndmin=2)
    return ConnectivityMatrix(
        values,
        sidecar["method"],
        sidecar.get("params", {}),
        delay_estimates,
        tuple(sidecar.get("flags", ())),
    )
