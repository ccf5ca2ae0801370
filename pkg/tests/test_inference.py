"""Threshold policy tests: easy/surrogate calculation and TCM application."""

import time

import numpy as np
import pytest

from spikeconn import _fast
from spikeconn.estimators import ConnectivityMatrix
from spikeconn.inference import (
    ThresholdPolicy,
    ThresholdedConnectivityMatrix,
    apply_threshold,
    easy_threshold,
    read_tcm,
    surrogate_threshold,
    surrogate_threshold_matrix,
    write_tcm,
)
from spikeconn.spikedata import ParameterError, SpikeTrain, from_time_arrays
from spikeconn.tspe import tspe

from test_tspe import planted_three_neuron_set


def cm_of(values, method="NCC", params=None):
    v = np.asarray(values, dtype=float)
    np.fill_diagonal(v, 0.0)
    return ConnectivityMatrix(v, method, params or {})


# ---------------------------------------------------------------------------
# Easy thresholds
# ---------------------------------------------------------------------------

def test_easy_threshold_formula():
    rng = np.random.default_rng(0)
    cm = cm_of(rng.normal(size=(4, 4)))
    off = np.abs(cm.values[~np.eye(4, dtype=bool)])
    assert easy_threshold(cm, 2.0) == pytest.approx(off.mean() + 2 * off.std(), rel=1e-12)


def test_easy_threshold_all_equal_passes_nothing():
    cm = cm_of(np.full((3, 3), 2.0))
    with pytest.warns(UserWarning, match="degenerate"):
        thr = easy_threshold(cm, 4.0)
    assert thr == 2.0
    tcm = apply_threshold(cm, ThresholdPolicy("easy", k=4.0))
    assert tcm.connection_count == 0  # strict > comparison


def test_easy_threshold_signed_populations():
    values = np.array([
        [0.0, 3.0, -2.0],
        [1.0, 0.0, -4.0],
        [2.0, -6.0, 0.0],
    ])
    cm = cm_of(values, method="TSPE")
    lo, hi = easy_threshold(cm, 1.0, signed=True)
    pos = np.array([3.0, 1.0, 2.0])
    neg = np.array([-2.0, -4.0, -6.0])
    assert hi == pytest.approx(pos.mean() + pos.std())
    assert lo == pytest.approx(neg.mean() - neg.std())


def test_easy_threshold_k_validation():
    with pytest.raises(ParameterError):
        easy_threshold(cm_of(np.zeros((3, 3))), 0.0)


# ---------------------------------------------------------------------------
# apply_threshold
# ---------------------------------------------------------------------------

def test_apply_zero_matrix_all_none():
    tcm = apply_threshold(cm_of(np.zeros((4, 4))), ThresholdPolicy("easy", k=3.0))
    assert not tcm.classes.any()
    assert not tcm.strengths.any()


def test_apply_signed_classification():
    values = np.zeros((4, 4))
    values[0, 1] = 10.0
    values[1, 2] = -10.0
    # enough sub-threshold noise that mean+SD sits strictly below the peaks
    values[2, 3], values[3, 0], values[0, 2] = 0.4, 0.5, 0.3
    values[1, 3], values[2, 0], values[3, 1] = -0.3, -0.2, -0.4
    cm = cm_of(values, method="TSPE")
    tcm = apply_threshold(cm, ThresholdPolicy("easy", k=1.0, signed=True))
    assert tcm.classes[0, 1] == 1
    assert tcm.classes[1, 2] == -1
    assert tcm.connection_count == 2
    assert tcm.strengths[0, 1] == 10.0 and tcm.strengths[1, 2] == -10.0


def test_apply_matches_bruteforce_comparison():
    rng = np.random.default_rng(1)
    cm = cm_of(rng.normal(size=(6, 6)))
    thr = easy_threshold(cm, 3.0)
    tcm = apply_threshold(cm, ThresholdPolicy("easy", k=3.0))
    for i in range(6):
        for j in range(6):
            expected = 1 if (i != j and abs(cm.values[i, j]) > thr) else 0
            assert tcm.classes[i, j] == expected


def test_apply_monotone_in_k():
    rng = np.random.default_rng(2)
    cm = cm_of(rng.normal(size=(8, 8)) ** 3)
    supports = []
    for k in (1.0, 2.0, 3.0, 4.0):
        tcm = apply_threshold(cm, ThresholdPolicy("easy", k=k))
        supports.append(set(zip(*np.nonzero(tcm.classes))))
    for smaller_k, larger_k in zip(supports[1:], supports[:-1]):
        assert smaller_k <= larger_k


def test_signed_policy_needs_signed_method():
    cm = cm_of(np.ones((3, 3)), method="NCC")
    with pytest.raises(ParameterError, match="signed"):
        apply_threshold(cm, ThresholdPolicy("easy", k=2.0, signed=True))


def test_policy_validation():
    with pytest.raises(ParameterError):
        ThresholdPolicy("surrogate", n=50)
    with pytest.raises(ParameterError):
        ThresholdPolicy("surrogate", n=2000)
    with pytest.raises(ParameterError):
        ThresholdPolicy("surrogate", window=-1)
    with pytest.raises(ParameterError):
        ThresholdPolicy("surrogate", criterion="split_1sd", signed=False)
    with pytest.raises(ParameterError):
        ThresholdPolicy("median")


# ---------------------------------------------------------------------------
# Surrogate thresholds: generic per-pair operation
# ---------------------------------------------------------------------------

def test_surrogate_constant_estimator_collapses():
    x = SpikeTrain(1, np.arange(10, 500, 10))
    y = SpikeTrain(2, np.arange(15, 500, 10))
    policy = ThresholdPolicy("surrogate", n=100, window=4)
    lo, hi = surrogate_threshold(
        x, y, 500, lambda *_: 7.25, policy, np.random.default_rng(0)
    )
    assert lo == pytest.approx(7.25) and hi == pytest.approx(7.25)


def test_surrogate_preserves_counts():
    x = SpikeTrain(1, np.arange(10, 2000, 7))
    y = SpikeTrain(2, np.arange(12, 2000, 11))
    seen = []

    def estimator(xt, yt, T):
        seen.append((xt.size, yt.size))
        return 0.0

    policy = ThresholdPolicy("surrogate", n=100, window=6)
    surrogate_threshold(x, y, 2000, estimator, policy, np.random.default_rng(1))
    assert all(nx == x.times.size and ny == y.times.size for nx, ny in seen)


def test_surrogate_minmax_seed_dependent():
    rng = np.random.default_rng(3)
    x = SpikeTrain(1, np.sort(rng.choice(np.arange(1, 5000), 200, replace=False)))
    y = SpikeTrain(2, np.sort(rng.choice(np.arange(1, 5000), 200, replace=False)))
    policy = ThresholdPolicy("surrogate", n=100, window=10, criterion="minmax")

    def estimator(xt, yt, T):
        return float(np.intersect1d(xt, yt).size)

    a = surrogate_threshold(x, y, 5000, estimator, policy, np.random.default_rng(7))
    b = surrogate_threshold(x, y, 5000, estimator, policy, np.random.default_rng(8))
    assert a != b


# ---------------------------------------------------------------------------
# Surrogate thresholds: batched TSPE kernel
# ---------------------------------------------------------------------------

def test_kernel_dither_contract():
    times = np.arange(10, 200, 3).astype(np.int64)
    scratch = np.zeros(500 + 2, np.uint8)
    out = np.empty(times.size, np.int64)
    state = _fast._dither_sorted(times, 2, 500, scratch, out, np.uint64(42))
    assert out.size == times.size
    assert np.unique(out).size == out.size
    assert (np.diff(out) > 0).all()
    assert out.min() >= 1 and out.max() <= 500
    assert np.abs(out - np.sort(times)).max() <= 2 + 1  # +-half plus possible nudge
    assert not scratch.any()
    assert state != np.uint64(42)


def test_pair_kernel_matches_batched_tspe():
    sts = planted_three_neuron_set(T=20_000)
    res = tspe(sts)
    a_arr = np.asarray([3, 4, 5, 6, 7, 8], np.int64)
    b_arr = np.asarray([2, 3, 4, 5, 6] * 6, np.int64)
    # bank layout: for each a, all b with c=0
    bank_a = np.repeat(a_arr, 5)
    grid_lo, grid_hi = 1 - 8, 25 + 8
    n_grid = grid_hi - grid_lo + 1
    ncc = np.empty(n_grid)
    acc = np.empty(n_grid + 6)
    tmp = np.empty(n_grid + 6)
    for s in range(3):
        for t in range(3):
            if s == t:
                continue
            val = _fast.pair_tspe_value(
                sts.spike_times(s + 1), sts.spike_times(t + 1),
                sts.duration_samples, grid_lo, grid_hi,
                bank_a, b_arr, np.zeros(30, np.int64), 25, False,
                ncc, acc, tmp,
            )
            assert val == pytest.approx(res.cm[s, t], rel=1e-9, abs=1e-12)


def test_surrogate_tspe_end_to_end_classification():
    sts = planted_three_neuron_set(T=60_000)
    res = tspe(sts)
    policy = ThresholdPolicy("surrogate", n=100, window=2, signed=True)
    tcm = apply_threshold(res.to_connectivity_matrix(), policy, sts, seed=5)
    assert tcm.classes[0, 1] == 1    # planted excitatory X -> Y
    assert tcm.classes[2, 0] == -1   # planted inhibitory Z -> X
    # nothing else above threshold
    others = tcm.classes.copy()
    others[0, 1] = 0
    others[2, 0] = 0
    assert not others.any()


def test_surrogate_matrix_deterministic_per_seed():
    sts = planted_three_neuron_set(T=10_000)
    policy = ThresholdPolicy("surrogate", n=100, window=2)
    lo1, up1 = surrogate_threshold_matrix(sts, policy, seed=9)
    lo2, up2 = surrogate_threshold_matrix(sts, policy, seed=9)
    assert np.array_equal(lo1, lo2) and np.array_equal(up1, up2)
    policy_mm = ThresholdPolicy("surrogate", n=100, window=2, criterion="minmax")
    mm1 = surrogate_threshold_matrix(sts, policy_mm, seed=9)
    mm2 = surrogate_threshold_matrix(sts, policy_mm, seed=10)
    assert not np.array_equal(mm1[1], mm2[1])


def test_surrogate_needs_trains():
    cm = cm_of(np.ones((3, 3)), method="TSPE")
    with pytest.raises(ParameterError, match="spike"):
        apply_threshold(cm, ThresholdPolicy("surrogate", n=100, window=2))


def test_generic_surrogate_path_runs_for_ncc():
    sts = planted_three_neuron_set(T=4_000)
    from spikeconn.estimators import estimate_cm

    cm = estimate_cm(sts, "NCC", d_max=5)
    policy = ThresholdPolicy("surrogate", n=100, window=2)
    tcm = apply_threshold(cm, policy, sts, seed=1)
    assert tcm.classes.shape == (3, 3)


@pytest.mark.slow
def test_surrogate_cost_within_2n_of_single_pair():
    sts = planted_three_neuron_set(T=30_000)
    policy = ThresholdPolicy("surrogate", n=100, window=2)
    surrogate_threshold_matrix(sts, policy, seed=0)  # warm-up (jit)

    a_arr = np.repeat(np.asarray([3, 4, 5, 6, 7, 8], np.int64), 5)
    b_arr = np.asarray([2, 3, 4, 5, 6] * 6, np.int64)
    c_arr = np.zeros(30, np.int64)
    grid_lo, grid_hi = -7, 33
    n_grid = grid_hi - grid_lo + 1
    ncc = np.empty(n_grid)
    acc = np.empty(n_grid + 6)
    tmp = np.empty(n_grid + 6)
    xs = sts.spike_times(1)
    ys = sts.spike_times(2)
    _fast.pair_tspe_value(xs, ys, sts.duration_samples, grid_lo, grid_hi,
                          a_arr, b_arr, c_arr, 25, False, ncc, acc, tmp)
    t0 = time.perf_counter()
    reps = 50
    for _ in range(reps):
        _fast.pair_tspe_value(xs, ys, sts.duration_samples, grid_lo, grid_hi,
                              a_arr, b_arr, c_arr, 25, False, ncc, acc, tmp)
    t_single = (time.perf_counter() - t0) / reps

    t0 = time.perf_counter()
    surrogate_threshold_matrix(sts, policy, seed=0)
    t_matrix = time.perf_counter() - t0
    n_pairs = 6  # ordered pairs of 3 channels
    assert t_matrix < 2 * policy.n * n_pairs * t_single + 1.0


# ---------------------------------------------------------------------------
# TCM round trip
# ---------------------------------------------------------------------------

def test_tcm_roundtrip(tmp_path):
    values = np.zeros((3, 3))
    values[0, 1] = 5.0
    values[2, 1] = -3.0
    cm = cm_of(values, method="TSPE")
    tcm = apply_threshold(cm, ThresholdPolicy("easy", k=1.0, signed=True))
    path = tmp_path / "tcm.csv"
    write_tcm(tcm, path)
    back = read_tcm(path)
    assert np.array_equal(back.classes, tcm.classes)
    assert np.allclose(back.strengths, tcm.strengths)
    assert back.policy == tcm.policy


def test_tcm_validation():
    with pytest.raises(ParameterError):
        ThresholdedConnectivityMatrix(
            np.array([[0, 1], [0, 0]], dtype=np.int8),
            np.array([[0.0, -2.0], [0.0, 0.0]]),  # sign mismatch
        )
