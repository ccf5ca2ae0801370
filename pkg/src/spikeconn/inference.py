"""Thresholding of connectivity matrices into ternary classifications.

Two threshold families are provided.  The easy threshold is global: mean
plus k standard deviations of the absolute off-diagonal matrix values (or,
in signed mode, separate sign-population thresholds).  The surrogate
threshold is per pair: both spike trains are jittered n times within a small
window, the estimator is recomputed on every surrogate pair, and the
threshold derives from that null distribution - mean +- 4 SD, the observed
extremes, the extremes padded by one SD, or sign-split means +- 1 SD.

Comparisons are strict (> / <), so a degenerate all-equal matrix yields no
connections.  Classifications are stored as -1 (inhibitory), 0 (none),
+1 (excitatory); unsigned methods can only produce 0/+1.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _fast
from .estimators import ConnectivityMatrix
from .spikedata import ParameterError, SpikeTrain, SpikeTrainSet, dither_spike_train
from . import tspe as tspe_mod

__all__ = [
    "ThresholdPolicy",
    "ThresholdedConnectivityMatrix",
    "SIGNED_METHODS",
    "CRITERIA",
    "easy_threshold",
    "surrogate_threshold",
    "surrogate_threshold_matrix",
    "apply_threshold",
    "write_tcm",
    "read_tcm",
]

SIGNED_METHODS = {"TSPE"}
CRITERIA = ("mean4sd", "minmax", "minmax_sd", "split_1sd")
_CRITERION_CODE = {name: i for i, name in enumerate(CRITERIA)}


@dataclass(frozen=True)
class ThresholdPolicy:
    kind: str = "easy"
    k: float = 4.0                  # easy: SD multiplier
    n: int = 100                    # surrogate iterations
    window: int = 2                 # surrogate jitter window, samples
    criterion: str = "mean4sd"      # surrogate statistic
    signed: bool = False

    def __post_init__(self):
        if self.kind not in ("easy", "surrogate"):
            raise ParameterError(f"unknown threshold kind {self.kind!r}")
        if self.kind == "easy" and self.k <= 0:
            raise ParameterError("easy threshold needs k > 0")
        if self.kind == "surrogate":
            if not 100 <= self.n <= 1000:
                raise ParameterError("surrogate iterations n must be in [100, 1000]")
            if self.window < 0:
                raise ParameterError("jitter window must be >= 0")
            if self.criterion not in CRITERIA:
                raise ParameterError(f"unknown criterion {self.criterion!r}")
            if self.criterion == "split_1sd" and not self.signed:
                raise ParameterError("split_1sd is a signed criterion")

    def as_dict(self) -> dict:
        d = {"kind": self.kind, "signed": self.signed}
        if self.kind == "easy":
            d["k"] = self.k
        else:
            d.update({"n": self.n, "window": self.window, "criterion": self.criterion})
        return d


@dataclass(frozen=True)
class ThresholdedConnectivityMatrix:
    """Ternary classes with the strengths that survived thresholding."""

    classes: np.ndarray
    strengths: np.ndarray
    policy: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.classes.shape != self.strengths.shape:
            raise ParameterError("classes and strengths must have equal shape")
        if np.any(np.diag(self.classes) != 0):
            raise ParameterError("diagonal classes must be 0")
        if np.any(np.sign(self.strengths[self.classes != 0]) != self.classes[self.classes != 0]):
            raise ParameterError("strength signs must match classes")

    @property
    def connection_count(self) -> int:
        return int(np.count_nonzero(self.classes))


# ---------------------------------------------------------------------------
# Easy (global) thresholds
# ---------------------------------------------------------------------------

def easy_threshold(cm: ConnectivityMatrix, k: float, signed: bool = False):
    """Global mean + k*SD threshold(s) from the off-diagonal distribution.

    Unsigned: one threshold on absolute values.  Signed: (negative,
    positive) thresholds from the sign-split populations; an empty
    population yields an infinite threshold so nothing of that sign passes.
    """
    if k <= 0:
        raise ParameterError("k must be > 0")
    if cm.values.size == 0:
        raise ParameterError("empty connectivity matrix")
    off = cm.values[~np.eye(cm.k, dtype=bool)]
    if not signed:
        mag = np.abs(off)
        sd = mag.std()
        if sd == 0.0:
            warnings.warn("degenerate matrix: SD of |values| is zero", stacklevel=2)
            return float(mag.mean())
        return float(mag.mean() + k * sd)
    pos = off[off > 0]
    neg = off[off < 0]
    upper = float(pos.mean() + k * pos.std()) if pos.size else np.inf
    lower = float(neg.mean() - k * neg.std()) if neg.size else -np.inf
    return lower, upper


# ---------------------------------------------------------------------------
# Surrogate (per-pair) thresholds
# ---------------------------------------------------------------------------

def _criterion_bounds(values: np.ndarray, criterion: str):
    if criterion == "mean4sd":
        mu, sd = values.mean(), values.std()
        return mu - 4.0 * sd, mu + 4.0 * sd
    if criterion == "minmax":
        return float(values.min()), float(values.max())
    if criterion == "minmax_sd":
        sd = values.std()
        return float(values.min() - sd), float(values.max() + sd)
    pos = values[values > 0]
    neg = values[values < 0]
    upper = float(pos.mean() + pos.std()) if pos.size else np.inf
    lower = float(neg.mean() - neg.std()) if neg.size else -np.inf
    return lower, upper


def surrogate_threshold(
    x: SpikeTrain,
    y: SpikeTrain,
    duration_samples: int,
    estimator,
    policy: ThresholdPolicy,
    rng: np.random.Generator,
):
    """Per-pair surrogate threshold for an arbitrary single-pair estimator.

    ``estimator(x_times, y_times, duration_samples) -> float`` is evaluated
    on ``policy.n`` jittered copies of both trains; returns the (lower,
    upper) bounds of the chosen criterion.
    """
    if policy.kind != "surrogate":
        raise ParameterError("policy must be a surrogate policy")
    values = np.empty(policy.n)
    for i in range(policy.n):
        xs = dither_spike_train(x, policy.window, rng, duration_samples)
        ys = dither_spike_train(y, policy.window, rng, duration_samples)
        values[i] = estimator(xs.times, ys.times, duration_samples)
    return _criterion_bounds(values, policy.criterion)


def surrogate_threshold_matrix(
    spike_set: SpikeTrainSet,
    policy: ThresholdPolicy,
    seed: int = 0,
    d_max: int = tspe_mod.DEFAULT_D_MAX,
    a_list=tspe_mod.DEFAULT_A_LIST,
    b_list=tspe_mod.DEFAULT_B_LIST,
    c_list=tspe_mod.DEFAULT_C_LIST,
    mean_subtract: bool = False,
):
    """Per-pair surrogate thresholds for the filter-bank estimator, batched.

    Every ordered pair gets its own deterministic jitter streams derived
    from ``seed``, so results are independent of scheduling and thread
    count.  Returns (lower, upper) matrices.
    """
    if policy.kind != "surrogate":
        raise ParameterError("policy must be a surrogate policy")
    k = spike_set.channel_count
    times = [t.times for t in spike_set.trains]
    indptr = np.zeros(k + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([t.size for t in times])
    flat = np.concatenate(times) if k else np.empty(0, np.int64)
    max_a, max_c = max(a_list), max(c_list)
    grid_lo = 1 - max_a - max_c
    grid_hi = d_max + max_a
    m_len = min(d_max + max_a - a - c for a in a_list for c in c_list)
    lower = np.zeros((k, k))
    upper = np.zeros((k, k))
    bank_a, bank_b, bank_c = [], [], []
    for a in a_list:
        for c in c_list:
            for b in b_list:
                bank_a.append(a)
                bank_b.append(b)
                bank_c.append(c)
    _fast.tspe_surrogate_thresholds(
        flat, indptr, spike_set.duration_samples, policy.n, policy.window // 2,
        seed, grid_lo, grid_hi,
        np.asarray(bank_a, np.int64), np.asarray(bank_b, np.int64),
        np.asarray(bank_c, np.int64), m_len, mean_subtract,
        _CRITERION_CODE[policy.criterion], lower, upper,
    )
    return lower, upper


# ---------------------------------------------------------------------------
# Applying thresholds
# ---------------------------------------------------------------------------

def apply_threshold(
    cm: ConnectivityMatrix,
    policy: ThresholdPolicy,
    spike_set: SpikeTrainSet | None = None,
    seed: int = 0,
) -> ThresholdedConnectivityMatrix:
    """Classify a connectivity matrix under the given policy.

    Signed policies require a sign-carrying method (TSPE).  Surrogate
    policies need the spike trains the matrix was estimated from; for TSPE
    matrices the batched kernel is used and the filter-bank parameters are
    taken from the matrix's own parameter record.
    """
    if policy.signed and cm.method not in SIGNED_METHODS:
        raise ParameterError(
            f"signed thresholding needs a signed method, not {cm.method}"
        )
    values = cm.values
    thresholds: dict = {}
    if policy.kind == "easy":
        if policy.signed:
            lo, hi = easy_threshold(cm, policy.k, signed=True)
            classes = np.where(values > hi, 1, np.where(values < lo, -1, 0))
            thresholds = {"lower": lo, "upper": hi}
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                thr = easy_threshold(cm, policy.k)
            classes = np.where(np.abs(values) > thr, 1, 0)
            thresholds = {"upper": thr}
    else:
        if spike_set is None:
            raise ParameterError("surrogate thresholding needs the spike trains")
        if cm.method == "TSPE":
            p = cm.params
            lower, upper = surrogate_threshold_matrix(
                spike_set, policy, seed,
                d_max=p.get("d_max", tspe_mod.DEFAULT_D_MAX),
                a_list=p.get("a_list", tspe_mod.DEFAULT_A_LIST),
                b_list=p.get("b_list", tspe_mod.DEFAULT_B_LIST),
                c_list=p.get("c_list", tspe_mod.DEFAULT_C_LIST),
                mean_subtract=p.get("mean_subtract", False),
            )
        else:
            lower, upper = _generic_surrogate_matrix(spike_set, cm, policy, seed)
        if policy.signed:
            classes = np.where(values > upper, 1, np.where(values < lower, -1, 0))
        else:
            classes = np.where(np.abs(values) > upper, 1, 0)
        thresholds = {
            "lower_mean": float(np.mean(lower[~np.eye(cm.k, dtype=bool)])),
            "upper_mean": float(np.mean(upper[~np.eye(cm.k, dtype=bool)])),
        }
    classes = classes.astype(np.int8)
    np.fill_diagonal(classes, 0)
    # unsigned policies classify on |value|, so the retained strength is the
    # magnitude; signed policies keep the raw signed value
    retained = values if policy.signed else np.abs(values)
    strengths = np.where(classes != 0, retained, 0.0)
    return ThresholdedConnectivityMatrix(
        classes, strengths, policy.as_dict(), thresholds
    )


def _generic_surrogate_matrix(spike_set, cm, policy, seed):
    """Python fallback: per-pair surrogate loop for non-TSPE estimators."""
    from .estimators import (
        TeParams,
        coincidence_index,
        cross_correlogram,
        delayed_mutual_information,
        delayed_transfer_entropy,
    )

    d_max = cm.params.get("d_max", 25)
    tau = cm.params.get("tau", 4)
    te_k = cm.params.get("k", 1)
    te_l = cm.params.get("l", 1)

    def dense(times, T):
        arr = np.zeros(T, dtype=np.uint8)
        arr[times - 1] = 1
        return arr

    def scalar(xt, yt, T):
        x, y = dense(xt, T), dense(yt, T)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if cm.method in ("NCC", "NCCCI"):
                f = cross_correlogram(x, y, (1, d_max))
                if cm.method == "NCC":
                    return f.values[np.argmax(np.abs(f.values))]
                return coincidence_index(f, tau, rectify=True)
            if cm.method == "MI":
                return delayed_mutual_information(x, y, (1, d_max)).values.max()
            params = TeParams(k=te_k, l=te_l, d_max=1 if cm.method == "D1TE" else d_max)
            f = delayed_transfer_entropy(x, y, params)
            if cm.method in ("DTECI", "DHOTECI"):
                return coincidence_index(f, tau, rectify=False)
            return f.values.max()

    k = cm.k
    lower = np.zeros((k, k))
    upper = np.zeros((k, k))
    root = np.random.SeedSequence(seed)
    pair_seeds = root.spawn(k * k)
    for s in range(k):
        for t in range(k):
            if s == t:
                continue
            rng = np.random.default_rng(pair_seeds[s * k + t])
            lower[s, t], upper[s, t] = surrogate_threshold(
                spike_set.trains[s], spike_set.trains[t],
                spike_set.duration_samples, scalar, policy, rng,
            )
    return lower, upper


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def write_tcm(tcm: ThresholdedConnectivityMatrix, classes_csv_path) -> None:
    """Classes CSV + strengths CSV + policy JSON sidecar."""
    path = Path(classes_csv_path)
    np.savetxt(path, tcm.classes, fmt="%d", delimiter=",")
    np.savetxt(path.with_name(path.stem + "_strengths.csv"),
               tcm.strengths, fmt="%.17g", delimiter=",")
    payload = {"policy": tcm.policy, "thresholds": tcm.thresholds}
    path.with_suffix(".json").write_text(json.dumps(payload, sort_keys=True))


def read_tcm(classes_csv_path) -> ThresholdedConnectivityMatrix:
    path = Path(classes_csv_path)
    classes = np.loadtxt(path, delimiter=",", dtype=np.int8, ndmin=2)
    strengths = np.loadtxt(path.with_name(path.stem + "_strengths.csv"),
                           delimiter=",", ndmin=2)
    sidecar = json.loads(path.with_suffix(".json").read_text())
    return ThresholdedConnectivityMatrix(
        classes, strengths, sidecar.get("policy", {}), sidecar.get("thresholds", {})
    )
