"""Ground-truth network construction and degree-distribution analysis.

A ground-truth network is a directed weighted graph over N neurons stored as
two dense N x N matrices, both indexed ``[source, target]``:

* the synaptic weight matrix, positive entries for excitatory sources and
  negative for inhibitory ones, zero meaning no synapse;
* the integer delay matrix in milliseconds, defined on the same support.

Four connection-mask families are provided: an out-regular random network
("SII", fixed out-degree, no inhibitory-to-inhibitory synapses), an
Erdos-Renyi random network ("ER"), an uncorrelated configuration-model
scale-free network ("IC") and a directed Barabasi-Albert network ("BA").
Self-connections and parallel synapses are never generated; antiparallel
pairs are allowed.  Neuron types are assigned in index blocks: the first 80%
of neurons are excitatory, the rest inhibitory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .spikedata import ParameterError, FormatError

__all__ = [
    "TopologySpec",
    "GroundTruthNetwork",
    "DegreeStatistics",
    "generate_topology",
    "assign_weights_and_delays",
    "build_network",
    "degree_statistics",
    "power_law_tail_slope",
    "write_network_json",
    "read_network_json",
]

EXCITATORY_FRACTION = 0.8
MAX_EXC_WEIGHT = 10.0
INH_WEIGHT = -5.0
DELAY_RANGE_MS = (1, 20)

FAMILIES = ("SII", "ER", "IC", "BA")


@dataclass(frozen=True)
class TopologySpec:
    """Parameters of one mask generator; unused family fields are ignored."""

    family: str
    n: int
    seed: int = 0
    out_degree: int = 100          # SII
    p: float = 0.1                 # ER
    min_degree: int = 10           # IC
    gamma: float = 2.0             # IC
    degree_cap: int | None = None  # IC; default 10 * sqrt(n)
    m_in: int = 12                 # BA
    m_out: int = 12                # BA

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown topology family {self.family!r}")
        if self.n < 10:
            raise ParameterError("n must be >= 10")
        n_exc = excitatory_count(self.n)
        if self.family == "SII":
            if not 1 <= self.out_degree < self.n:
                raise ParameterError("SII out_degree must be in [1, n)")
            if self.out_degree > n_exc:
                raise ParameterError(
                    "SII out_degree exceeds the excitatory pool available to "
                    "inhibitory sources"
                )
        elif self.family == "ER":
            if not 0.0 < self.p < 1.0:
                raise ParameterError("ER p must be in (0, 1)")
        elif self.family == "IC":
            if not 1 <= self.min_degree < self.n:
                raise ParameterError("IC min_degree must be in [1, n)")
            if self.gamma <= 1.0:
                raise ParameterError("IC gamma must be > 1")
            cap = self.degree_cap if self.degree_cap is not None else default_degree_cap(self.n)
            if not self.min_degree < cap < self.n:
                raise ParameterError("IC degree_cap must satisfy min_degree < cap < n")
        elif self.family == "BA":
            if not (1 <= self.m_in < self.n and 1 <= self.m_out < self.n):
                raise ParameterError("BA m_in/m_out must be in [1, n)")
            if max(self.m_in, self.m_out) >= _BA_SEED_SIZE:
                raise ParameterError(
                    f"BA attachments must be < seed core size {_BA_SEED_SIZE}"
                )
            if self.n <= _BA_SEED_SIZE:
                raise ParameterError(f"BA n must exceed seed core size {_BA_SEED_SIZE}")

    def params(self) -> dict:
        if self.family == "SII":
            return {"out_degree": self.out_degree}
        if self.family == "ER":
            return {"p": self.p}
        if self.family == "IC":
            cap = self.degree_cap if self.degree_cap is not None else default_degree_cap(self.n)
            return {"min_degree": self.min_degree, "gamma": self.gamma, "degree_cap": cap}
        return {"m_in": self.m_in, "m_out": self.m_out}


def excitatory_count(n: int) -> int:
    return int(round(EXCITATORY_FRACTION * n))


def default_degree_cap(n: int) -> int:
    return min(int(10 * np.sqrt(n)), n - 1)


@dataclass(frozen=True)
class GroundTruthNetwork:
    """Weight and delay matrices plus neuron types; [source, target] indexed."""

    weights: np.ndarray
    delays_ms: np.ndarray
    excitatory: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w, d = self.weights, self.delays_ms
        if w.shape != d.shape or w.shape[0] != w.shape[1]:
            raise ParameterError("weights and delays must be square and same shape")
        if np.any(np.diag(w) != 0):
            raise ParameterError("self-connections are prohibited")
        support = w != 0
        if np.any((d == 0) & support) or np.any((d != 0) & ~support):
            raise ParameterError("delay support must equal weight support")

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def edge_count(self) -> int:
        return int(np.count_nonzero(self.weights))

    def subnetwork(self, channels: np.ndarray) -> "GroundTruthNetwork":
        """Restrict to the given neuron indices (0-based, in order)."""
        idx = np.asarray(channels, dtype=np.intp)
        return GroundTruthNetwork(
            self.weights[np.ix_(idx, idx)],
            self.delays_ms[np.ix_(idx, idx)],
            self.excitatory[idx],
            dict(self.meta, subset=idx.tolist()),
        )


# ---------------------------------------------------------------------------
# Mask generators
# ---------------------------------------------------------------------------

_BA_SEED_SIZE = 25


def generate_topology(spec: TopologySpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Generate the boolean connection mask of the requested family."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    if spec.family == "SII":
        return _mask_sii(spec, rng)
    if spec.family == "ER":
        return _mask_er(spec, rng)
    if spec.family == "IC":
        return _mask_ic(spec, rng)
    return _mask_ba(spec, rng)


def _mask_sii(spec: TopologySpec, rng) -> np.ndarray:
    n, k = spec.n, spec.out_degree
    n_exc = excitatory_count(n)
    mask = np.zeros((n, n), dtype=bool)
    exc_targets = np.arange(n_exc)
    for src in range(n):
        if src < n_exc:
            pool = np.concatenate([np.arange(src), np.arange(src + 1, n)])
        else:
            pool = exc_targets  # inhibitory sources never hit inhibitory targets
        mask[src, rng.choice(pool, size=k, replace=False)] = True
    return mask


def _mask_er(spec: TopologySpec, rng) -> np.ndarray:
    mask = rng.random((spec.n, spec.n)) < spec.p
    np.fill_diagonal(mask, False)
    return mask


def _power_law_sample(rng, size, k_min, k_max, gamma) -> np.ndarray:
    ks = np.arange(k_min, k_max + 1)
    probs = ks.astype(float) ** (-gamma)
    probs /= probs.sum()
    return rng.choice(ks, size=size, p=probs)


def _mask_ic(spec: TopologySpec, rng) -> np.ndarray:
    n = spec.n
    cap = spec.degree_cap if spec.degree_cap is not None else default_degree_cap(n)
    out_deg = _power_law_sample(rng, n, spec.min_degree, cap, spec.gamma)
    in_deg = _power_law_sample(rng, n, spec.min_degree, cap, spec.gamma)
    # equalize stub counts by bumping random entries of the lighter sequence
    while True:
        diff = int(out_deg.sum() - in_deg.sum())
        if diff == 0:
            break
        lighter = in_deg if diff > 0 else out_deg
        room = np.flatnonzero(lighter < cap)
        picks = rng.choice(room, size=min(abs(diff), room.size), replace=False)
        lighter[picks] += 1

    src = np.repeat(np.arange(n), out_deg)
    tgt = np.repeat(np.arange(n), in_deg)
    rng.shuffle(tgt)
    # swap-repair self loops and parallel edges, preserving both degree sequences
    m = src.size
    for _ in range(1000):
        key = src.astype(np.int64) * n + tgt
        order = np.argsort(key, kind="stable")
        dup = np.zeros(m, dtype=bool)
        dup[order[1:]] = key[order[1:]] == key[order[:-1]]
        bad = np.flatnonzero(dup | (src == tgt))
        if bad.size == 0:
            break
        partners = rng.integers(0, m, size=bad.size)
        for e, f in zip(bad, partners):
            tgt[e], tgt[f] = tgt[f], tgt[e]
    else:
        raise ParameterError("IC stub matching failed to converge")
    mask = np.zeros((n, n), dtype=bool)
    mask[src, tgt] = True
    return mask


def _mask_ba(spec: TopologySpec, rng) -> np.ndarray:
    n = spec.n
    mask = np.zeros((n, n), dtype=bool)
    core = _BA_SEED_SIZE
    mask[:core, :core] = True
    np.fill_diagonal(mask[:core, :core], False)
    degree = np.zeros(n, dtype=np.int64)
    degree[:core] = 2 * (core - 1)
    for v in range(core, n):
        weights = degree[:v].astype(float)
        probs = weights / weights.sum()
        targets = rng.choice(v, size=spec.m_out, replace=False, p=probs)
        sources = rng.choice(v, size=spec.m_in, replace=False, p=probs)
        mask[v, targets] = True
        mask[sources, v] = True
        degree[targets] += 1
        degree[sources] += 1
        degree[v] = spec.m_in + spec.m_out
    return mask


# ---------------------------------------------------------------------------
# Weights, delays, whole networks
# ---------------------------------------------------------------------------

def assign_weights_and_delays(
    mask: np.ndarray,
    scale: float,
    rng: np.random.Generator,
    inhibitory_lognormal: bool = False,
    meta: dict | None = None,
    weight_sigma: float = 1.0,
) -> GroundTruthNetwork:
    """Fill a mask with synaptic weights and uniform integer delays.

    Excitatory entries are log-normal (``mu=0``, log-space spread
    ``weight_sigma``) times ``scale``, clipped at 10.  Inhibitory entries
    are the constant -5 unless ``inhibitory_lognormal`` selects a negative
    log-normal clipped at -5.  Delays are uniform integers in [1, 20] ms on
    the mask support.
    """
    if scale <= 0:
        raise ParameterError("scale must be > 0")
    if weight_sigma < 0:
        raise ParameterError("weight_sigma must be >= 0")
    mask = np.asarray(mask, dtype=bool)
    n = mask.shape[0]
    if np.any(np.diag(mask)):
        raise ParameterError("mask has self-connections")
    n_exc = excitatory_count(n)
    excitatory = np.zeros(n, dtype=bool)
    excitatory[:n_exc] = True

    weights = np.zeros((n, n), dtype=np.float64)
    exc_support = mask.copy()
    exc_support[n_exc:] = False
    inh_support = mask.copy()
    inh_support[:n_exc] = False
    weights[exc_support] = np.minimum(
        rng.lognormal(mean=0.0, sigma=weight_sigma, size=int(exc_support.sum())) * scale,
        MAX_EXC_WEIGHT,
    )
    if inhibitory_lognormal:
        weights[inh_support] = -np.minimum(
            rng.lognormal(mean=0.0, sigma=weight_sigma, size=int(inh_support.sum())) * scale,
            -INH_WEIGHT,
        )
    else:
        weights[inh_support] = INH_WEIGHT

    delays = np.zeros((n, n), dtype=np.int64)
    delays[mask] = rng.integers(DELAY_RANGE_MS[0], DELAY_RANGE_MS[1] + 1, size=int(mask.sum()))
    return GroundTruthNetwork(weights, delays, excitatory, meta or {})


def build_network(
    spec: TopologySpec,
    scale: float,
    inhibitory_lognormal: bool = False,
    weight_sigma: float = 1.0,
) -> GroundTruthNetwork:
    """Generate mask, weights and delays for a spec with its own seed."""
    rng = np.random.default_rng(spec.seed)
    mask = generate_topology(spec, rng)
    meta = {"family": spec.family, "params": spec.params(), "seed": spec.seed,
            "scale": scale, "weight_sigma": weight_sigma}
    return assign_weights_and_delays(mask, scale, rng, inhibitory_lognormal, meta,
                                     weight_sigma)


# ---------------------------------------------------------------------------
# Degree analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DegreeStatistics:
    in_degree: np.ndarray
    out_degree: np.ndarray
    total_degree: np.ndarray
    excitatory: np.ndarray

    def histogram(self, which: str = "total", neuron_type: str | None = None) -> np.ndarray:
        """Degree histogram (index = degree), optionally for one type."""
        degrees = getattr(self, f"{which}_degree")
        if neuron_type == "E":
            degrees = degrees[self.excitatory]
        elif neuron_type == "I":
            degrees = degrees[~self.excitatory]
        elif neuron_type is not None:
            raise ParameterError("neuron_type must be 'E', 'I' or None")
        return np.bincount(degrees)

    def summary(self) -> dict:
        out = {}
        for which in ("in", "out", "total"):
            degrees = getattr(self, f"{which}_degree")
            for label, sel in (("all", slice(None)),
                               ("E", self.excitatory),
                               ("I", ~self.excitatory)):
                d = degrees[sel]
                out[f"{which}_{label}"] = {
                    "mean": float(d.mean()) if d.size else 0.0,
                    "sd": float(d.std()) if d.size else 0.0,
                }
        return out


def degree_statistics(network: GroundTruthNetwork) -> DegreeStatistics:
    """Per-neuron in/out/total degrees from the nonzero weight support."""
    support = network.weights != 0
    out_degree = support.sum(axis=1).astype(np.int64)
    in_degree = support.sum(axis=0).astype(np.int64)
    return DegreeStatistics(in_degree, out_degree, in_degree + out_degree,
                            network.excitatory.copy())


def power_law_tail_slope(degrees: np.ndarray, k_min: int, n_bins: int = 12) -> float:
    """Slope of log10(density) vs log10(degree) on log-spaced bins >= k_min."""
    degrees = np.asarray(degrees)
    degrees = degrees[degrees >= k_min]
    if degrees.size < 10 or degrees.max() <= k_min:
        raise ParameterError("not enough tail mass to fit a slope")
    edges = np.geomspace(k_min, degrees.max() + 1, num=n_bins + 1)
    counts, edges = np.histogram(degrees, bins=edges)
    density = counts / np.diff(edges)
    centers = np.sqrt(edges[:-1] * edges[1:])
    keep = counts > 0
    if keep.sum() < 3:
        raise ParameterError("fewer than 3 populated bins")
    slope = np.polyfit(np.log10(centers[keep]), np.log10(density[keep]), 1)[0]
    return float(slope)


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def write_network_json(network: GroundTruthNetwork, path) -> None:
    """Serialize as neuron types + edge records (1-based indices)."""
    src, tgt = np.nonzero(network.weights)
    edges = [
        {
            "source": int(s) + 1,
            "target": int(t) + 1,
            "weight": float(network.weights[s, t]),
            "delay_ms": int(network.delays_ms[s, t]),
        }
        for s, t in zip(src, tgt)
    ]
    payload = {
        "neuron_types": ["E" if e else "I" for e in network.excitatory],
        "edges": edges,
        "meta": network.meta,
    }
    Path(path).write_text(json.dumps(payload))


def read_network_json(path) -> GroundTruthNetwork:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    for key in ("neuron_types", "edges"):
        if key not in raw:
            raise FormatError(f"{key}: missing required field")
    types = raw["neuron_types"]
    if not types or any(t not in ("E", "I") for t in types):
        raise FormatError("neuron_types: entries must be 'E' or 'I'")
    n = len(types)
    weights = np.zeros((n, n))
    delays = np.zeros((n, n), dtype=np.int64)
    for i, edge in enumerate(raw["edges"]):
        try:
            s, t = edge["source"] - 1, edge["target"] - 1
            w, d = float(edge["weight"]), int(edge["delay_ms"])
        except (KeyError, TypeError) as exc:
            raise FormatError(f"edges[{i}]: malformed record") from exc
        if not (0 <= s < n and 0 <= t < n):
            raise FormatError(f"edges[{i}]: index out of range")
        weights[s, t] = w
        delays[s, t] = d
    return GroundTruthNetwork(
        weights, delays, np.asarray([t == "E" for t in types]), raw.get("meta", {})
    )
