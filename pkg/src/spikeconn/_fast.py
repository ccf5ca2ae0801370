"""Numba kernels for the hot loops: network integration and pairwise scans.

Everything here is deterministic for fixed inputs.  The pairwise kernels use
``prange`` with writes restricted to disjoint output cells and draw any
randomness from counter-based per-pair streams, so results are bit-identical
at any thread count.
"""

import numpy as np
from numba import njit, prange

MAX_DELAY_MS = 20
_RING = MAX_DELAY_MS + 1


@njit(cache=True)
def izhikevich_run(a, b, c, d, indptr, targets, weights, delays,
                   noise_targets, noise_amp, bias, duration_ms,
                   v_trace, u_trace, i_trace, record):
    """Integrate the two-variable quadratic neuron model over one network.

    Per 1 ms tick: deliver ring-buffered synaptic currents plus noise and
    bias, advance the membrane in two 0.5 ms substeps and the recovery
    variable in one full step, then emit and reset every neuron at or above
    the 30 mV threshold, scheduling its outgoing weights ``delay`` ticks
    ahead.  Returns (spike_ticks, spike_neurons, error_tick); ``error_tick``
    is -1 unless a non-finite state aborted the run.
    """
    n = a.size
    v = np.full(n, -65.0)
    u = b * v
    ibuf = np.zeros((_RING, n))
    cap = 4096
    spike_t = np.empty(cap, np.int64)
    spike_i = np.empty(cap, np.int64)
    count = 0
    n_noise = noise_targets.shape[1]

    for t in range(duration_ms):
        slot = t % _RING
        row = ibuf[slot]
        for j in range(n_noise):
            row[noise_targets[t, j]] += noise_amp
        for i in range(n):
            vi = v[i]
            ui = u[i]
            cur = row[i] + bias[i]
            vi += 0.5 * (0.04 * vi * vi + 5.0 * vi + 140.0 - ui + cur)
            vi += 0.5 * (0.04 * vi * vi + 5.0 * vi + 140.0 - ui + cur)
            ui += a[i] * (b[i] * vi - ui)
            if not (-1e10 < vi < 1e10):
                return spike_t[:count], spike_i[:count], t
            if vi >= 30.0:
                if count == cap:
                    cap *= 2
                    new_t = np.empty(cap, np.int64)
                    new_i = np.empty(cap, np.int64)
                    new_t[:count] = spike_t
                    new_i[:count] = spike_i
                    spike_t = new_t
                    spike_i = new_i
                spike_t[count] = t
                spike_i[count] = i
                count += 1
                vi = c[i]
                ui += d[i]
                for e in range(indptr[i], indptr[i + 1]):
                    ibuf[(t + delays[e]) % _RING, targets[e]] += weights[e]
            v[i] = vi
            u[i] = ui
            if record:
                v_trace[t, i] = vi
                u_trace[t, i] = ui
                i_trace[t, i] = cur
            row[i] = 0.0
    return spike_t[:count], spike_i[:count], -1


@njit(cache=True)
def coincidence_tensor(times, chans, d_max, n_ch, counts):
    """Pair-coincidence counts for displacements 0..d_max in one pass.

    ``times``/``chans`` are all events of all channels sorted by time;
    ``counts[d, src, tgt]`` accumulates pairs where the target event lags
    the source event by d bins (ties at d = 0 count both orders).
    """
    n = times.size
    q0 = 0
    for p in range(n):
        tp = times[p]
        cp = chans[p]
        while q0 < n and times[q0] < tp:
            q0 += 1
        q = q0
        hi = tp + d_max
        while q < n and times[q] <= hi:
            counts[times[q] - tp, cp, chans[q]] += 1.0
            q += 1


_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_MUL2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _splitmix(state):
    """Counter-based 64-bit generator step; returns (next_state, output)."""
    state = state + _SM_GAMMA
    z = state
    z = (z ^ (z >> np.uint64(30))) * _SM_MUL1
    z = (z ^ (z >> np.uint64(27))) * _SM_MUL2
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True)
def _dither_sorted(times, half, T, scratch, out, state):
    """Uniform +-half displacement with redraw-then-nudge collision handling.

    Writes the sorted, duplicate-free surrogate times into ``out`` and leaves
    ``scratch`` cleared again.  Returns the advanced RNG state.
    """
    n = times.size
    span = np.uint64(2 * half + 1)
    for i in range(n):
        t = times[i]
        pos = np.int64(-1)
        for _ in range(100):
            state, z = _splitmix(state)
            cand = t + np.int64(z % span) - half
            if cand < 1:
                cand = 1
            elif cand > T:
                cand = T
            if scratch[cand] == 0:
                pos = cand
                break
        if pos < 0:
            r = np.int64(1)
            while True:
                lo = t - r
                if lo >= 1 and scratch[lo] == 0:
                    pos = lo
                    break
                hi = t + r
                if hi <= T and scratch[hi] == 0:
                    pos = hi
                    break
                r += 1
        scratch[pos] = 1
        out[i] = pos
    for i in range(1, n):
        key = out[i]
        j = i - 1
        while j >= 0 and out[j] > key:
            out[j + 1] = out[j]
            j -= 1
        out[j + 1] = key
    for i in range(n):
        scratch[out[i]] = 0
    return state


@njit(cache=True)
def _count_leq(arr, value):
    lo = 0
    hi = arr.size
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] <= value:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def pair_tspe_value(xs, ys, T, grid_lo, grid_hi, a_arr, b_arr, c_arr,
                    m_len, mean_subtract, ncc, acc, tmp):
    """Signed extremum of the summed filter bank for one spike-time pair.

    ``xs``/``ys`` are sorted 1-based sample times; the correlogram is
    z-score normalized (optionally mean-subtracted) exactly like the batched
    tensor path.
    """
    n_grid = grid_hi - grid_lo + 1
    for i in range(n_grid):
        ncc[i] = 0.0
    nx = xs.size
    ny = ys.size
    if nx == 0 or ny == 0 or nx == T or ny == T:
        return 0.0
    mux = nx / T
    muy = ny / T
    sx = np.sqrt(mux * (1.0 - mux))
    sy = np.sqrt(muy * (1.0 - muy))
    j_lo = 0
    for i in range(nx):
        lo_val = xs[i] + grid_lo
        hi_val = xs[i] + grid_hi
        while j_lo < ny and ys[j_lo] < lo_val:
            j_lo += 1
        j = j_lo
        while j < ny and ys[j] <= hi_val:
            ncc[ys[j] - xs[i] - grid_lo] += 1.0
            j += 1
    if mean_subtract:
        for di in range(n_grid):
            d = grid_lo + di
            if d >= 0:
                ax = _count_leq(xs, T - d)
                by = ny - _count_leq(ys, d)
                overlap = T - d
            else:
                ax = nx - _count_leq(xs, -d)
                by = _count_leq(ys, T + d)
                overlap = T + d
            ncc[di] += -muy * ax - mux * by + mux * muy * overlap
    norm = sx * sy * T
    for di in range(n_grid):
        ncc[di] /= norm
    for i in range(acc.size):
        acc[i] = 0.0
    for f in range(a_arr.size):
        a = a_arr[f]
        b = b_arr[f]
        c = c_arr[f]
        seg0 = (1 - a - c) - grid_lo
        L = 2 * a + b + 2 * c
        n1 = (n_grid - seg0) - L + 1
        inv_a = 1.0 / a
        two_b = 2.0 / b
        for j in range(n1):
            base = seg0 + j
            s = 0.0
            for q in range(a):
                s -= (ncc[base + q] + ncc[base + a + b + 2 * c + q]) * inv_a
            for q in range(b):
                s += two_b * ncc[base + a + c + q]
            tmp[j] = s
        run = 0.0
        for j in range(n1 + b - 1):
            if j < n1:
                run += tmp[j]
            if j - b >= 0:
                run -= tmp[j - b]
            acc[j] += run
    best = 0.0
    for j in range(m_len):
        if np.abs(acc[j]) > np.abs(best):
            best = acc[j]
    return best


@njit(cache=True, parallel=True)
def tspe_surrogate_thresholds(times_flat, indptr, T, n_surr, half, master_seed,
                              grid_lo, grid_hi, a_arr, b_arr, c_arr, m_len,
                              mean_subtract, criterion, lower, upper):
    """Per-pair surrogate thresholds for the filter-bank estimator.

    For every ordered pair both trains are dithered ``n_surr`` times with
    pair-derived RNG streams (scheduling-independent) and the estimator
    scalar recomputed.  ``criterion``: 0 = mean +- 4 SD, 1 = min/max,
    2 = min-SD/max+SD, 3 = sign-split mean +- 1 SD.
    """
    k = indptr.size - 1
    max_b = 0
    for i in range(b_arr.size):
        if b_arr[i] > max_b:
            max_b = b_arr[i]
    n_grid = grid_hi - grid_lo + 1
    for pair in prange(k * k):
        src = pair // k
        tgt = pair % k
        if src == tgt:
            continue
        xs0 = times_flat[indptr[src]:indptr[src + 1]]
        ys0 = times_flat[indptr[tgt]:indptr[tgt + 1]]
        scratch = np.zeros(T + 2, np.uint8)
        xbuf = np.empty(xs0.size, np.int64)
        ybuf = np.empty(ys0.size, np.int64)
        ncc = np.empty(n_grid)
        acc = np.empty(n_grid + max_b)
        tmp = np.empty(n_grid + max_b)
        vals = np.empty(n_surr)
        for r in range(n_surr):
            state = (np.uint64(master_seed) * np.uint64(0x9E3779B97F4A7C15)
                     ^ np.uint64(pair) * np.uint64(0xD1B54A32D192ED03)
                     ^ np.uint64(r) * np.uint64(0x8CB92BA72F3D8DD7))
            state, _ = _splitmix(state)
            state = _dither_sorted(xs0, half, T, scratch, xbuf, state)
            state = _dither_sorted(ys0, half, T, scratch, ybuf, state)
            vals[r] = pair_tspe_value(
                xbuf, ybuf, T, grid_lo, grid_hi, a_arr, b_arr, c_arr,
                m_len, mean_subtract, ncc, acc, tmp,
            )
        if criterion == 0:
            mu = vals.mean()
            sd = vals.std()
            lower[src, tgt] = mu - 4.0 * sd
            upper[src, tgt] = mu + 4.0 * sd
        elif criterion == 1:
            lower[src, tgt] = vals.min()
            upper[src, tgt] = vals.max()
        elif criterion == 2:
            sd = vals.std()
            lower[src, tgt] = vals.min() - sd
            upper[src, tgt] = vals.max() + sd
        else:
            n_pos = 0
            n_neg = 0
            sum_pos = 0.0
            sum_neg = 0.0
            for r in range(n_surr):
                if vals[r] > 0.0:
                    n_pos += 1
                    sum_pos += vals[r]
                elif vals[r] < 0.0:
                    n_neg += 1
                    sum_neg += vals[r]
            if n_pos > 0:
                mu_p = sum_pos / n_pos
                var_p = 0.0
                for r in range(n_surr):
                    if vals[r] > 0.0:
                        var_p += (vals[r] - mu_p) ** 2
                upper[src, tgt] = mu_p + np.sqrt(var_p / n_pos)
            else:
                upper[src, tgt] = np.inf
            if n_neg > 0:
                mu_n = sum_neg / n_neg
                var_n = 0.0
                for r in range(n_surr):
                    if vals[r] < 0.0:
                        var_n += (vals[r] - mu_n) ** 2
                lower[src, tgt] = mu_n - np.sqrt(var_n / n_neg)
            else:
                lower[src, tgt] = -np.inf


@njit(cache=True)
def te_from_counts(joint, n_w, n_v, L, k_bits):
    """Plug-in transfer entropy in bits from a (word, source-word) count table.

    ``joint[w, v]`` counts the pattern with target word ``w`` (future bit on
    top of k history bits) and source word ``v``; zero-count patterns
    contribute nothing.
    """
    n_wa = joint.shape[0]
    n_va = joint.shape[1]
    hy_mask = (1 << k_bits) - 1
    n_hyv = np.zeros((n_wa >> 1, n_va))
    n_yhy = np.zeros(n_wa)
    n_hy = np.zeros(n_wa >> 1)
    for w in range(n_wa):
        hy = w & hy_mask
        for v in range(n_va):
            cnt = joint[w, v]
            n_hyv[hy, v] += cnt
            n_yhy[w] += cnt
            n_hy[hy] += cnt
    te = 0.0
    for w in range(n_wa):
        hy = w & hy_mask
        for v in range(n_va):
            n3 = joint[w, v]
            if n3 > 0:
                te += (n3 / L) * np.log2(n3 * n_hy[hy] / (n_hyv[hy, v] * n_yhy[w]))
    return te


@njit(cache=True)
def te_pair_delays(y_pos, y_word, x_pos, x_word, T, k, l, d_lo, d_hi, out):
    """Transfer entropy of one ordered pair for every delay in [d_lo, d_hi].

    ``y_pos/y_word`` list the positions (0-based bins) whose target pattern
    word is nonzero, likewise for the source; all-zero patterns are counted
    implicitly from the valid window length.  One sliding-window pass
    collects the nonzero-nonzero joint counts of all delays at once and the
    per-delay marginals are maintained incrementally, so the cost is
    O(events + coincidences), not O(events * delays).
    """
    n_d = d_hi - d_lo + 1
    n_w = 1 << (k + 1)
    n_v = 1 << l
    i_hi = T - 2
    joint = np.zeros((n_d, n_w, n_v), np.int64)

    # nonzero-word coincidences: target position i uses source word at
    # m = i + 1 - d, so every source event in [i+1-d_hi, i+1-d_lo] hits one d
    q0 = 0
    for p in range(y_pos.size):
        i = y_pos[p]
        m_lo = i + 1 - d_hi
        m_hi = i + 1 - d_lo
        while q0 < x_pos.size and x_pos[q0] < m_lo:
            q0 += 1
        q = q0
        while q < x_pos.size and x_pos[q] <= m_hi:
            d = i + 1 - x_pos[q]
            il = k - 1 if k - 1 > d + l - 2 else d + l - 2
            if i >= il:
                joint[d - d_lo, y_word[p], x_word[q]] += 1
            q += 1

    # target marginals over [i_lo(d), T-2]; the left edge only moves right
    marg_w = np.zeros((n_d, n_w), np.int64)
    hist_w = np.zeros(n_w, np.int64)
    il0 = max(k - 1, d_lo + l - 2)
    ptr = np.searchsorted(y_pos, il0)
    for p in range(ptr, y_pos.size):
        hist_w[y_word[p]] += 1
    for di in range(n_d):
        il = max(k - 1, d_lo + di + l - 2)
        while ptr < y_pos.size and y_pos[ptr] < il:
            hist_w[y_word[ptr]] -= 1
            ptr += 1
        for w in range(n_w):
            marg_w[di, w] = hist_w[w]

    # source marginals over m in [i_lo(d)+1-d, T-1-d]; left edge expands
    # leftward (or stays), right edge shrinks leftward as d grows
    marg_v = np.zeros((n_d, n_v), np.int64)
    hist_v = np.zeros(n_v, np.int64)
    a0 = max(k - 1, d_lo + l - 2) + 1 - d_lo
    b0 = i_hi + 1 - d_lo
    pl = np.searchsorted(x_pos, a0)
    pr = np.searchsorted(x_pos, b0 + 1)
    for q in range(pl, pr):
        hist_v[x_word[q]] += 1
    for di in range(n_d):
        d = d_lo + di
        a = max(k - 1, d + l - 2) + 1 - d
        b = i_hi + 1 - d
        while pl > 0 and x_pos[pl - 1] >= a:
            pl -= 1
            hist_v[x_word[pl]] += 1
        while pr > pl and x_pos[pr - 1] > b:
            pr -= 1
            hist_v[x_word[pr]] -= 1
        for v in range(n_v):
            marg_v[di, v] = hist_v[v]

    table = np.zeros((n_w, n_v), np.int64)
    for di in range(n_d):
        d = d_lo + di
        il = max(k - 1, d + l - 2)
        L = i_hi - il + 1
        if L <= 0:
            out[di] = 0.0
            continue
        nz_y = 0
        nz_x = 0
        nz_both = 0
        for w in range(n_w):
            for v in range(n_v):
                table[w, v] = joint[di, w, v]
                nz_both += joint[di, w, v]
        for w in range(1, n_w):
            row = 0
            for v in range(1, n_v):
                row += joint[di, w, v]
            table[w, 0] = marg_w[di, w] - row
            nz_y += marg_w[di, w]
        for v in range(1, n_v):
            col = 0
            for w in range(1, n_w):
                col += joint[di, w, v]
            table[0, v] = marg_v[di, v] - col
            nz_x += marg_v[di, v]
        table[0, 0] = L - (nz_y + nz_x - nz_both)
        out[di] = te_from_counts(table, n_w, n_v, L, k)


@njit(cache=True, parallel=True)
def te_matrix(pos_y_flat, word_y_flat, indptr_y,
              pos_x_flat, word_x_flat, indptr_x,
              T, k, l, d_lo, d_hi, values):
    """All ordered pairs x TE delay sweep; values has shape (K, K, n_delays)."""
    n_ch = indptr_y.size - 1
    for pair in prange(n_ch * n_ch):
        src = pair // n_ch
        tgt = pair % n_ch
        if src == tgt:
            continue
        te_pair_delays(
            pos_y_flat[indptr_y[tgt]:indptr_y[tgt + 1]],
            word_y_flat[indptr_y[tgt]:indptr_y[tgt + 1]],
            pos_x_flat[indptr_x[src]:indptr_x[src + 1]],
            word_x_flat[indptr_x[src]:indptr_x[src + 1]],
            T, k, l, d_lo, d_hi,
            values[src, tgt],
        )


@njit(cache=True)
def coba_run(tau, tau_ex, tau_inh, drive_ex, drive_inh, v_rest, v_thresh,
             v_reset, g_unit, indptr, targets, weights, delays,
             noise_targets, noise_g, bias_g, duration_ms,
             gex_trace, v_trace, record):
    """Conductance-based integrate-and-fire backend (1 ms Euler steps).

    Arriving spikes increment the matching conductance by |weight| * g_unit;
    conductances decay exponentially with their own time constants and act
    on the membrane through fixed driving terms.
    """
    n = indptr.size - 1
    v = np.full(n, v_rest)
    g_ex = np.zeros(n)
    g_inh = np.zeros(n)
    ex_buf = np.zeros((_RING, n))
    inh_buf = np.zeros((_RING, n))
    decay_ex = np.exp(-1.0 / tau_ex)
    decay_inh = np.exp(-1.0 / tau_inh)
    cap = 4096
    spike_t = np.empty(cap, np.int64)
    spike_i = np.empty(cap, np.int64)
    count = 0
    n_noise = noise_targets.shape[1]

    for t in range(duration_ms):
        slot = t % _RING
        for j in range(n_noise):
            ex_buf[slot, noise_targets[t, j]] += noise_g
        for i in range(n):
            gx = g_ex[i] + ex_buf[slot, i] + bias_g[i]
            gi = g_inh[i] + inh_buf[slot, i]
            vi = v[i]
            vi += ((v_rest - vi) + gx * drive_ex + gi * drive_inh) / tau
            if not (-1e10 < vi < 1e10):
                return spike_t[:count], spike_i[:count], t
            if vi >= v_thresh:
                if count == cap:
                    cap *= 2
                    new_t = np.empty(cap, np.int64)
                    new_i = np.empty(cap, np.int64)
                    new_t[:count] = spike_t
                    new_i[:count] = spike_i
                    spike_t = new_t
                    spike_i = new_i
                spike_t[count] = t
                spike_i[count] = i
                count += 1
                vi = v_reset
                for e in range(indptr[i], indptr[i + 1]):
                    w = weights[e]
                    if w > 0.0:
                        ex_buf[(t + delays[e]) % _RING, targets[e]] += w * g_unit
                    elif w < 0.0:
                        inh_buf[(t + delays[e]) % _RING, targets[e]] -= w * g_unit
            v[i] = vi
            g_ex[i] = gx * decay_ex
            g_inh[i] = gi * decay_inh
            if record:
                gex_trace[t, i] = gx
                v_trace[t, i] = vi
            ex_buf[slot, i] = 0.0
            inh_buf[slot, i] = 0.0
    return spike_t[:count], spike_i[:count], -1
