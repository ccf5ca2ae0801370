"""Network simulation backends producing labelled spike-train sets.

The default backend is the two-variable quadratic ("Izhikevich") neuron
integrated on a 1 ms tick with two 0.5 ms membrane substeps, regular-spiking
parameters for excitatory neurons and fast-spiking for inhibitory ones, and
per-edge axonal delays of 1..20 ms handled through a ring buffer.  A
conductance-based integrate-and-fire backend with exponentially decaying
synaptic conductances is available as an alternative.

Without external drive these networks are silent, so every tick a
configurable number of uniformly chosen neurons receives a fixed current
kick (default: one neuron, +20).  The synaptic weight scale that makes a
given topology produce network bursts is found by :func:`calibrate_weight_scale`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _fast
from .spikedata import ParameterError, SpikeTrain, SpikeTrainSet
from .topology import GroundTruthNetwork, TopologySpec, build_network

__all__ = [
    "IzhikevichParams",
    "NEURON_PRESETS",
    "CobaParams",
    "SimulationConfig",
    "SimulationError",
    "CalibrationError",
    "SimulationRecord",
    "simulate",
    "simulate_coba_if",
    "select_recording_subset",
    "subset_spike_set",
    "detect_network_bursts",
    "calibrate_weight_scale",
]


class SimulationError(RuntimeError):
    """The integrator hit a non-finite state; message carries the tick."""


class CalibrationError(RuntimeError):
    """Weight-scale search failed to land in the target burst-rate range."""


@dataclass(frozen=True)
class IzhikevichParams:
    """Neuron preset: recovery time scale a, coupling b, reset c, jump d."""

    a: float
    b: float
    c: float
    d: float


NEURON_PRESETS = {
    "RS": IzhikevichParams(0.02, 0.20, -65.0, 8.00),
    "IB": IzhikevichParams(0.02, 0.20, -55.0, 4.00),
    "CH": IzhikevichParams(0.02, 0.20, -50.0, 2.00),
    "FS": IzhikevichParams(0.10, 0.20, -65.0, 2.00),
    "LTS": IzhikevichParams(0.02, 0.25, -65.0, 2.00),
    "TC": IzhikevichParams(0.02, 0.25, -65.0, 0.05),
}


@dataclass(frozen=True)
class CobaParams:
    tau: float = 20.0
    tau_ex: float = 5.0
    tau_inh: float = 10.0
    e_ex: float = 0.0
    e_inh: float = -80.0
    v_rest: float = -60.0
    v_thresh: float = -50.0
    g_unit: float = 0.01


@dataclass(frozen=True)
class SimulationConfig:
    """Run settings; the tick is fixed at 1 ms (sampling rate 1 kHz)."""

    duration_ms: int
    seed: int = 0
    noise_rate: int = 1
    noise_amplitude: float = 20.0
    subset_size: int = 100
    model: str = "izhikevich"
    excitatory_preset: str = "RS"
    inhibitory_preset: str = "FS"
    coba: CobaParams = field(default_factory=CobaParams)
    bias_current: float | np.ndarray = 0.0

    def __post_init__(self):
        if self.duration_ms < 1:
            raise ParameterError("duration_ms must be >= 1")
        if self.model not in ("izhikevich", "coba_if"):
            raise ParameterError(f"unknown model {self.model!r}")
        if self.noise_rate < 0:
            raise ParameterError("noise_rate must be >= 0")


@dataclass(frozen=True)
class SimulationRecord:
    """Optional per-tick state traces for debugging small runs."""

    v: np.ndarray
    u: np.ndarray
    current: np.ndarray


def _csr_edges(network: GroundTruthNetwork):
    src, tgt = np.nonzero(network.weights)
    indptr = np.zeros(network.n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    return (
        indptr,
        tgt.astype(np.int64),
        network.weights[src, tgt],
        network.delays_ms[src, tgt].astype(np.int64),
    )


def _noise_schedule(rng, config, n):
    if config.noise_rate == 0:
        return np.zeros((config.duration_ms, 0), dtype=np.int64)
    return rng.integers(0, n, size=(config.duration_ms, config.noise_rate), dtype=np.int64)


def _bias_array(config, n):
    bias = np.asarray(config.bias_current, dtype=np.float64)
    if bias.ndim == 0:
        bias = np.full(n, float(bias))
    if bias.shape != (n,):
        raise ParameterError("bias_current must be scalar or length-N")
    return bias


def _to_spike_set(spike_t, spike_i, n, duration_ms) -> SpikeTrainSet:
    order = np.argsort(spike_i, kind="stable")  # kernel emits in time order
    times_sorted = spike_t[order] + 1           # ticks 0-based -> samples 1-based
    counts = np.bincount(spike_i, minlength=n)
    bounds = np.concatenate([[0], np.cumsum(counts)])
    trains = tuple(
        SpikeTrain(i + 1, times_sorted[bounds[i]:bounds[i + 1]])
        for i in range(n)
    )
    return SpikeTrainSet(trains, 1000.0, duration_ms)


def simulate(
    network: GroundTruthNetwork,
    config: SimulationConfig,
    record_state: bool = False,
):
    """Run the configured backend; returns a SpikeTrainSet of all N channels.

    With ``record_state=True`` additionally returns a
    :class:`SimulationRecord` of per-tick (v, u, input current) traces,
    intended for small diagnostic runs only.
    """
    if config.model == "coba_if":
        return simulate_coba_if(network, config, record_state)
    n = network.n
    params_e = NEURON_PRESETS[config.excitatory_preset]
    params_i = NEURON_PRESETS[config.inhibitory_preset]
    a = np.where(network.excitatory, params_e.a, params_i.a)
    b = np.where(network.excitatory, params_e.b, params_i.b)
    c = np.where(network.excitatory, params_e.c, params_i.c)
    d = np.where(network.excitatory, params_e.d, params_i.d)
    indptr, targets, weights, delays = _csr_edges(network)
    rng = np.random.default_rng(config.seed)
    noise = _noise_schedule(rng, config, n)
    bias = _bias_array(config, n)
    shape = (config.duration_ms, n) if record_state else (0, 0)
    v_trace = np.zeros(shape)
    u_trace = np.zeros(shape)
    i_trace = np.zeros(shape)
    spike_t, spike_i, err = _fast.izhikevich_run(
        a, b, c, d, indptr, targets, weights, delays,
        noise, config.noise_amplitude, bias, config.duration_ms,
        v_trace, u_trace, i_trace, record_state,
    )
    if err >= 0:
        raise SimulationError(f"non-finite membrane state at tick {err}")
    spikes = _to_spike_set(spike_t, spike_i, n, config.duration_ms)
    if record_state:
        return spikes, SimulationRecord(v_trace, u_trace, i_trace)
    return spikes


def simulate_coba_if(
    network: GroundTruthNetwork,
    config: SimulationConfig,
    record_state: bool = False,
):
    """Conductance-based integrate-and-fire backend (same delivery machinery).

    Noise and bias are injected as excitatory-conductance increments.  With
    ``record_state=True`` also returns the per-tick g_ex trace.
    """
    n = network.n
    p = config.coba
    indptr, targets, weights, delays = _csr_edges(network)
    rng = np.random.default_rng(config.seed)
    noise = _noise_schedule(rng, config, n)
    bias = _bias_array(config, n)
    shape = (config.duration_ms, n) if record_state else (0, 0)
    gex_trace = np.zeros(shape)
    v_trace = np.zeros(shape)
    spike_t, spike_i, err = _fast.coba_run(
        p.tau, p.tau_ex, p.tau_inh,
        p.e_ex - p.v_rest, p.e_inh - p.v_rest,
        p.v_rest, p.v_thresh, p.v_rest, p.g_unit,
        indptr, targets, weights, delays,
        noise, config.noise_amplitude * p.g_unit, bias,
        config.duration_ms, gex_trace, v_trace, record_state,
    )
    if err >= 0:
        raise SimulationError(f"non-finite membrane state at tick {err}")
    spikes = _to_spike_set(spike_t, spike_i, n, config.duration_ms)
    if record_state:
        return spikes, gex_trace, v_trace
    return spikes


def select_recording_subset(
    network: GroundTruthNetwork, k: int = 100, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Sample k recording channels honouring the 4:1 type ratio.

    Returns sorted 0-based neuron indices: 0.8k excitatory and 0.2k
    inhibitory, each drawn uniformly within type.  k must be divisible by 5.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if k > network.n:
        raise ParameterError("subset larger than network")
    if k % 5 != 0 or k <= 0:
        raise ParameterError("subset size must be a positive multiple of 5")
    n_exc_pick = (4 * k) // 5
    n_inh_pick = k // 5
    exc_pool = np.flatnonzero(network.excitatory)
    inh_pool = np.flatnonzero(~network.excitatory)
    if n_exc_pick > exc_pool.size or n_inh_pick > inh_pool.size:
        raise ParameterError("type pools too small for the 4:1 subset ratio")
    picks = np.concatenate([
        rng.choice(exc_pool, size=n_exc_pick, replace=False),
        rng.choice(inh_pool, size=n_inh_pick, replace=False),
    ])
    picks.sort()
    return picks


def subset_spike_set(spike_set: SpikeTrainSet, indices: np.ndarray) -> SpikeTrainSet:
    """Extract the given 0-based channels, relabelled 1..k in index order."""
    trains = tuple(
        SpikeTrain(new_id + 1, spike_set.trains[int(old)].times)
        for new_id, old in enumerate(indices)
    )
    return SpikeTrainSet(trains, spike_set.sampling_rate, spike_set.duration_samples)


def detect_network_bursts(
    spike_set: SpikeTrainSet, window_ms: int = 50, fraction: float = 0.25
):
    """Find network bursts: maximal runs of windows where many channels spike.

    The recording is cut into consecutive ``window_ms`` windows (1 kHz time
    base); a window qualifies when at least ``fraction`` of the channels
    spike in it.  Returns (list of (start_ms, end_ms) intervals,
    bursts/minute).
    """
    if spike_set.channel_count == 0:
        raise ParameterError("empty spike set")
    n_windows = -(-spike_set.duration_samples // window_ms)
    active = np.zeros(n_windows, dtype=np.int64)
    for train in spike_set.trains:
        if train.times.size:
            active += np.bincount(
                np.unique((train.times - 1) // window_ms), minlength=n_windows
            )
    qualifying = active >= fraction * spike_set.channel_count
    intervals = []
    start = None
    for w, ok in enumerate(qualifying):
        if ok and start is None:
            start = w
        elif not ok and start is not None:
            intervals.append((start * window_ms, w * window_ms))
            start = None
    if start is not None:
        intervals.append((start * window_ms, n_windows * window_ms))
    minutes = spike_set.duration_samples / spike_set.sampling_rate / 60.0
    return intervals, len(intervals) / minutes


def calibrate_weight_scale(
    spec: TopologySpec,
    target_bursts_per_min: tuple[float, float],
    probe_duration_ms: int = 60_000,
    max_iter: int = 12,
    probe_seed: int = 0,
    initial_scale: float = 1.0,
    weight_sigma: float = 1.0,
):
    """Search the weight scale that makes the topology burst at the target rate.

    Doubles the scale until the burst rate of a probe simulation reaches the
    target range's lower edge, then bisects; every probe counts against
    ``max_iter``.  Returns (scale, achieved bursts/min).
    """
    lo_target, hi_target = target_bursts_per_min
    if not lo_target < hi_target or lo_target < 0:
        raise ParameterError("target range must be a nonempty (lo, hi) with lo >= 0")

    def probe(scale):
        network = build_network(spec, scale, weight_sigma=weight_sigma)
        config = SimulationConfig(duration_ms=probe_duration_ms, seed=probe_seed)
        spikes = simulate(network, config)
        _, rate = detect_network_bursts(spikes)
        return rate

    lo, hi = 0.0, initial_scale
    rate = 0.0
    for it in range(max_iter):
        rate = probe(hi)
        if rate >= lo_target:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise CalibrationError(
            f"no burst rate >= {lo_target}/min up to scale {hi} "
            f"(last rate {rate:.2f}, bracket [{lo}, {hi}])"
        )
    if rate <= hi_target:
        return hi, rate
    used = it + 1
    lo_s, hi_s = lo, hi
    for _ in range(max_iter - used):
        mid = 0.5 * (lo_s + hi_s)
        rate = probe(mid)
        if rate < lo_target:
            lo_s = mid
        elif rate > hi_target:
            hi_s = mid
        else:
            return mid, rate
    raise CalibrationError(
        f"burst rate did not converge to [{lo_target}, {hi_target}]/min; "
        f"bracket [{lo_s}, {hi_s}], last rate {rate:.2f}"
    )
