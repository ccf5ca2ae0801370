"""Evaluation against ground truth, graph metrics, dynamics, and timing.

Estimated matrices are scored against the known synaptic weights of the
simulated network restricted to the recorded channels.  Detection quality is
summarized by the ROC curve over all off-diagonal cells (positives: |value|
above a sweeping threshold; truth: nonzero weight), usually read out as the
true-positive rate at 1% false-positive rate.  Sign classification quality
uses a 3-class confusion matrix (inhibitory / excitatory / none).

Graph structure is quantified on the symmetrized binary graph: mean path
length over reachable unordered pairs, the average local clustering
coefficient, and small-world-ness against degree-free random references
with matched node and edge counts.  Network dynamics between two
thresholded snapshots are described by the fractions of gained / stronger /
same / weaker / lost effects per strength-sign group, with two-sample
Kolmogorov-Smirnov tests for significance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .estimators import ConnectivityMatrix, estimate_cm
from .inference import ThresholdedConnectivityMatrix
from .spikedata import ParameterError, SpikeTrainSet
from .topology import GroundTruthNetwork
from .tspe import tspe

__all__ = [
    "RocCurve",
    "ConfusionMatrix3",
    "GraphMetrics",
    "DynamicsReport",
    "KsResult",
    "TimingRecord",
    "roc_curve",
    "tpr_at_fpr",
    "confusion_matrix3",
    "confusion_from_roc_operating_point",
    "symmetrize",
    "mean_path_length",
    "clustering_coefficient",
    "small_world_ness",
    "classify_effect_changes",
    "compare_dynamics",
    "ks_two_sample",
    "benchmark_estimators",
]

CLASS_ORDER = ("inhibitory", "excitatory", "none")


# ---------------------------------------------------------------------------
# ROC
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    tn: np.ndarray
    fn: np.ndarray
    degenerate: str | None = None

    def auc(self) -> float:
        return float(np.trapezoid(self.tpr, self.fpr))


def _truth_weights(truth) -> np.ndarray:
    if isinstance(truth, GroundTruthNetwork):
        return truth.weights
    return np.asarray(truth)


def _scores(cm: ConnectivityMatrix) -> np.ndarray:
    if cm.params.get("polarity") == "low_is_connection":
        return -cm.values
    return np.abs(cm.values)


def roc_curve(cm: ConnectivityMatrix, truth) -> RocCurve:
    """Detection ROC of a connectivity matrix against the true weights.

    Thresholds sweep all distinct scores descending (score: |value|, or the
    negated value for distance-like methods); a cell is predicted positive
    when its score strictly exceeds the threshold.  The diagonal is
    excluded.  All-positive or all-negative truth yields a flagged curve
    whose undefined rate is NaN.
    """
    weights = _truth_weights(truth)
    if weights.shape != cm.values.shape:
        raise ParameterError("matrix and truth shapes differ")
    off = ~np.eye(cm.k, dtype=bool)
    scores = _scores(cm)[off]
    labels = weights[off] != 0
    pos = int(labels.sum())
    neg = labels.size - pos
    degenerate = None
    if pos == 0:
        degenerate = "no_positives"
    elif neg == 0:
        degenerate = "no_negatives"

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    distinct = np.flatnonzero(np.diff(sorted_scores)) + 1
    cuts = np.concatenate([[0], distinct, [scores.size]])
    tp_cum = np.concatenate([[0], np.cumsum(sorted_labels)])
    tp = tp_cum[cuts]
    predicted = cuts
    fp = predicted - tp
    fn = pos - tp
    tn = neg - fp
    thresholds = np.concatenate([
        [np.inf], sorted_scores[cuts[1:-1]] if cuts.size > 2 else [], [-np.inf]
    ])
    with np.errstate(invalid="ignore", divide="ignore"):
        tpr = np.where(pos > 0, tp / max(pos, 1), np.nan)
        fpr = np.where(neg > 0, fp / max(neg, 1), np.nan)
    return RocCurve(fpr, tpr, thresholds, tp, fp, tn, fn, degenerate)


def tpr_at_fpr(roc: RocCurve, target_fpr: float = 0.01) -> float:
    """TPR at the target FPR, linearly interpolated on the upper envelope."""
    if roc.degenerate:
        raise ParameterError(f"degenerate ROC: {roc.degenerate}")
    fpr, tpr = roc.fpr, roc.tpr
    # upper envelope: highest tpr at each distinct fpr
    best = {}
    for f, t in zip(fpr, tpr):
        best[f] = max(best.get(f, 0.0), t)
    xs = np.array(sorted(best))
    ys = np.array([best[x] for x in xs])
    return float(np.interp(target_fpr, xs, ys))


# ---------------------------------------------------------------------------
# Confusion matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix3:
    """3x3 counts, rows = predicted, columns = actual (inh, exc, none)."""

    counts: np.ndarray
    precision: np.ndarray  # per predicted class
    recall: np.ndarray     # per actual class
    accuracy: float

    def as_dict(self) -> dict:
        return {
            "class_order": list(CLASS_ORDER),
            "counts": self.counts.tolist(),
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "accuracy": self.accuracy,
        }


def _class_index(sign_matrix: np.ndarray) -> np.ndarray:
    # -1 -> 0 (inhibitory), +1 -> 1 (excitatory), 0 -> 2 (none)
    return np.where(sign_matrix < 0, 0, np.where(sign_matrix > 0, 1, 2))


def confusion_matrix3(tcm: ThresholdedConnectivityMatrix, truth) -> ConfusionMatrix3:
    """Three-class confusion of a signed TCM against sign(true weights)."""
    weights = _truth_weights(truth)
    if weights.shape != tcm.classes.shape:
        raise ParameterError("TCM and truth shapes differ")
    k = weights.shape[0]
    off = ~np.eye(k, dtype=bool)
    predicted = _class_index(tcm.classes)[off]
    actual = _class_index(np.sign(weights))[off]
    counts = np.zeros((3, 3), dtype=np.int64)
    np.add.at(counts, (predicted, actual), 1)
    with np.errstate(invalid="ignore"):
        precision = np.where(counts.sum(1) > 0, np.diag(counts) / counts.sum(1), np.nan)
        recall = np.where(counts.sum(0) > 0, np.diag(counts) / counts.sum(0), np.nan)
    accuracy = float(np.trace(counts) / counts.sum())
    return ConfusionMatrix3(counts, precision, recall, accuracy)


def confusion_from_roc_operating_point(
    cm: ConnectivityMatrix, truth, target_fpr: float = 0.01
) -> ConfusionMatrix3:
    """Confusion matrix of a signed method at the threshold giving the target FPR.

    Picks the smallest detection threshold whose FPR stays at or below the
    target (maximum detection power at that budget) and classifies detected
    cells by their sign.
    """
    weights = _truth_weights(truth)
    roc = roc_curve(cm, truth)
    ok = np.flatnonzero(roc.fpr <= target_fpr)
    thr = roc.thresholds[ok[np.argmax(roc.tpr[ok])]]
    detected = _scores(cm) > thr
    np.fill_diagonal(detected, False)
    signed = np.where(detected, np.sign(cm.values).astype(np.int8), 0)
    tcm = ThresholdedConnectivityMatrix(
        signed.astype(np.int8),
        np.where(detected, np.where(signed < 0, -np.abs(cm.values), np.abs(cm.values)), 0.0),
        {"kind": "roc_operating_point", "target_fpr": target_fpr},
    )
    return confusion_matrix3(tcm, weights)


# ---------------------------------------------------------------------------
# Graph metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphMetrics:
    mpl: float
    clustering: float
    mpl_rand: float
    clustering_rand: float
    small_world_ness: float
    reachable_fraction: float
    degenerate: bool = False


def symmetrize(adj: np.ndarray) -> np.ndarray:
    """Undirected reading of a directed graph: edge iff either direction."""
    a = np.asarray(adj) != 0
    out = a | a.T
    np.fill_diagonal(out, False)
    return out


def mean_path_length(adj: np.ndarray):
    """Average BFS distance over reachable unordered pairs.

    The graph is symmetrized first.  Returns (mpl, reachable_fraction);
    unreachable pairs are excluded from the average and reported through
    the fraction.
    """
    a = symmetrize(adj)
    n = a.shape[0]
    if n < 2:
        raise ParameterError("need at least two nodes")
    dist = shortest_path(csr_matrix(a), method="D", unweighted=True, directed=False)
    iu = np.triu_indices(n, k=1)
    d = dist[iu]
    reachable = np.isfinite(d)
    frac = float(reachable.mean())
    if not reachable.any():
        return float("inf"), 0.0
    return float(d[reachable].mean()), frac


def clustering_coefficient(adj: np.ndarray) -> float:
    """Network average of local clustering 2E / (k (k-1)); k < 2 counts 0."""
    a = symmetrize(adj).astype(np.int64)
    k = a.sum(axis=1)
    # edges among neighbours = triangles through the node
    tri = np.diag(a @ a @ a) / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        local = np.where(k >= 2, 2.0 * tri / (k * (k - 1.0)), 0.0)
    return float(local.mean())


def _random_reference(n: int, n_edges: int, rng) -> np.ndarray:
    pairs = n * (n - 1) // 2
    chosen = rng.choice(pairs, size=min(n_edges, pairs), replace=False)
    iu = np.triu_indices(n, k=1)
    adj = np.zeros((n, n), dtype=bool)
    adj[iu[0][chosen], iu[1][chosen]] = True
    return adj | adj.T


def small_world_ness(
    adj: np.ndarray,
    rng: np.random.Generator | None = None,
    reference_realizations: int = 10,
) -> GraphMetrics:
    """Clustering and path length versus matched random references.

    S = (C / C_rand) / (MPL / MPL_rand), with the reference metrics averaged
    over random graphs with the same node and undirected edge counts.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    a = symmetrize(adj)
    n_edges = int(a.sum()) // 2
    if n_edges == 0:
        raise ParameterError("graph has no edges")
    mpl, frac = mean_path_length(a)
    clustering = clustering_coefficient(a)
    mpl_refs, c_refs = [], []
    for _ in range(reference_realizations):
        ref = _random_reference(a.shape[0], n_edges, rng)
        ref_mpl, _ = mean_path_length(ref)
        mpl_refs.append(ref_mpl)
        c_refs.append(clustering_coefficient(ref))
    mpl_rand = float(np.mean(mpl_refs))
    c_rand = float(np.mean(c_refs))
    degenerate = c_rand == 0.0 or mpl_rand == 0.0 or not np.isfinite(mpl)
    if degenerate:
        s = float("nan")
    else:
        s = (clustering / c_rand) / (mpl / mpl_rand)
    return GraphMetrics(mpl, clustering, mpl_rand, c_rand, s, frac, degenerate)


# ---------------------------------------------------------------------------
# Network dynamics
# ---------------------------------------------------------------------------

CHANGE_KINDS = ("gained", "stronger", "same", "weaker", "lost")
EFFECT_GROUPS = (
    "strong_inhibitory", "weak_inhibitory", "strong_excitatory", "weak_excitatory"
)


@dataclass(frozen=True)
class DynamicsReport:
    """Per effect-group fractions of the five change kinds."""

    groups: dict
    strong_threshold: dict = field(default_factory=dict)

    def fraction(self, group: str, kind: str) -> float:
        return self.groups[group][kind]


def classify_effect_changes(
    before: ThresholdedConnectivityMatrix,
    after: ThresholdedConnectivityMatrix,
    strong_quantile: float = 0.75,
    same_tol: float = 0.05,
) -> DynamicsReport:
    """Compare two thresholded snapshots effect by effect.

    An effect is one (source, target, sign) triple present in either
    snapshot.  Strength groups split at the ``strong_quantile`` of each
    sign's pooled |strength| (an effect's strength is its larger magnitude
    across the snapshots, which keeps the report symmetric under swapping
    the inputs).  Matched effects count as same when the relative magnitude
    change stays within ``same_tol``.
    """
    if before.classes.shape != after.classes.shape:
        raise ParameterError("snapshot shapes differ")
    effects = {}
    for name, tcm in (("before", before), ("after", after)):
        src, tgt = np.nonzero(tcm.classes)
        for s, t in zip(src, tgt):
            sign = int(tcm.classes[s, t])
            key = (int(s), int(t), sign)
            entry = effects.setdefault(key, {})
            entry[name] = abs(float(tcm.strengths[s, t]))
    split = {}
    for sign in (-1, 1):
        pool = [max(e.values()) for (s, t, sg), e in effects.items() if sg == sign]
        split[sign] = float(np.quantile(pool, strong_quantile)) if pool else np.inf

    counts = {g: {c: 0 for c in CHANGE_KINDS} for g in EFFECT_GROUPS}
    for (s, t, sign), entry in effects.items():
        strength = max(entry.values())
        kind = "inhibitory" if sign < 0 else "excitatory"
        level = "strong" if strength >= split[sign] else "weak"
        group = f"{level}_{kind}"
        if "before" not in entry:
            change = "gained"
        elif "after" not in entry:
            change = "lost"
        else:
            b, a = entry["before"], entry["after"]
            if a > b * (1 + same_tol):
                change = "stronger"
            elif a < b * (1 - same_tol):
                change = "weaker"
            else:
                change = "same"
        counts[group][change] += 1
    groups = {}
    for g, c in counts.items():
        total = sum(c.values())
        groups[g] = (
            {k: c[k] / total for k in CHANGE_KINDS} | {"count": total}
            if total
            else {k: 0.0 for k in CHANGE_KINDS} | {"count": 0}
        )
    return DynamicsReport(groups, {"inhibitory": split[-1], "excitatory": split[1]})


@dataclass(frozen=True)
class KsResult:
    d: float
    p_value: float
    reject: bool


def ks_two_sample(sample_a, sample_b, alpha: float = 0.05) -> KsResult:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.

    D is the exact supremum ECDF distance; the p-value evaluates the
    Kolmogorov distribution at sqrt(n_eff) * D with effective size
    n_a * n_b / (n_a + n_b).
    """
    a = np.sort(np.asarray(sample_a, dtype=float))
    b = np.sort(np.asarray(sample_b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ParameterError("samples must be non-empty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    d = float(np.abs(cdf_a - cdf_b).max())
    n_eff = a.size * b.size / (a.size + b.size)
    lam = np.sqrt(n_eff) * d
    p = _kolmogorov_sf(lam)
    return KsResult(d, p, p < alpha)


def _kolmogorov_sf(lam: float) -> float:
    if lam < 1e-8:
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = 2.0 * (-1.0) ** (j - 1) * np.exp(-2.0 * j * j * lam * lam)
        total += term
        if abs(term) < 1e-16:
            break
    return float(min(max(total, 0.0), 1.0))


def compare_dynamics(reports_a, reports_b, alpha: float = 0.05, pool: str = "per_group"):
    """K-S tests between two collections of dynamics reports.

    ``per_group`` tests each (effect group, change kind) fraction sample
    separately; ``all`` pools the groups and tests per change kind only.
    Groups that are empty in every report are skipped.
    """
    if pool not in ("per_group", "all"):
        raise ParameterError("pool must be 'per_group' or 'all'")
    results = {}
    if pool == "per_group":
        keys = [(g, c) for g in EFFECT_GROUPS for c in CHANGE_KINDS]
        for g, c in keys:
            xa = [r.fraction(g, c) for r in reports_a if r.groups[g]["count"]]
            xb = [r.fraction(g, c) for r in reports_b if r.groups[g]["count"]]
            if xa and xb:
                results[f"{g}:{c}"] = ks_two_sample(xa, xb, alpha)
    else:
        for c in CHANGE_KINDS:
            xa = [
                r.fraction(g, c)
                for r in reports_a
                for g in EFFECT_GROUPS
                if r.groups[g]["count"]
            ]
            xb = [
                r.fraction(g, c)
                for r in reports_b
                for g in EFFECT_GROUPS
                if r.groups[g]["count"]
            ]
            if xa and xb:
                results[c] = ks_two_sample(xa, xb, alpha)
    return results


# ---------------------------------------------------------------------------
# Timing benchmark
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimingRecord:
    method: str
    channels: int
    duration_s: float
    seconds: float
    pairs_per_second: float


def _run_method(spike_set: SpikeTrainSet, method: str):
    if method == "TSPE":
        return tspe(spike_set)
    return estimate_cm(spike_set, method)


def benchmark_estimators(spike_sets, methods) -> list[TimingRecord]:
    """Wall-clock table over (set x method); a warm-up run is discarded.

    ``spike_sets`` is an iterable of SpikeTrainSet (vary channel counts and
    durations there); the warm-up uses a short prefix of each set so JIT
    compilation and caches never pollute the timed run.
    """
    records = []
    for spike_set in spike_sets:
        warm = spike_set.truncated(min(10_000, spike_set.duration_samples))
        for method in methods:
            _run_method(warm, method)  # warm-up discarded
            t0 = time.perf_counter()
            _run_method(spike_set, method)
            seconds = time.perf_counter() - t0
            k = spike_set.channel_count
            pairs = k * (k - 1)
            records.append(
                TimingRecord(
                    method,
                    k,
                    spike_set.duration_seconds,
                    seconds,
                    pairs / seconds if seconds > 0 else float("inf"),
                )
            )
    return records
