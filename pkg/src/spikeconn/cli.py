"""Command-line driver: generate, simulate, estimate, threshold, evaluate.

Every subcommand is a thin shell over the library.  The ``pipeline``
subcommand chains the stages from one JSON config, derives per-stage seeds
from the master seed, and writes a manifest with per-stage wall times and
SHA-256 checksums of all outputs; re-running the same config and seed
reproduces every non-timing output byte for byte at any thread count.

Exit codes: 0 success, 2 configuration or validation error, 3 I/O error,
4 numerical or simulation error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analysis, estimators, inference, plots, simulator, spikedata, topology, tspe

log = logging.getLogger("spikeconn")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _stage_seeds(master: int, names) -> dict:
    children = np.random.SeedSequence(master).spawn(len(names))
    return {n: int(c.generate_state(1)[0]) for n, c in zip(names, children)}


def _json_dump(payload, path: Path) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=1))


def _topology_spec(cfg: dict, seed: int) -> topology.TopologySpec:
    fields = {
        k: cfg[k]
        for k in ("out_degree", "p", "min_degree", "gamma", "degree_cap", "m_in", "m_out")
        if k in cfg
    }
    return topology.TopologySpec(cfg["family"], cfg["n"], seed=seed, **fields)


def _policy_from_config(cfg: dict) -> inference.ThresholdPolicy:
    return inference.ThresholdPolicy(
        kind=cfg.get("kind", "easy"),
        k=cfg.get("k", 4.0),
        n=cfg.get("n", 100),
        window=cfg.get("window", 2),
        criterion=cfg.get("criterion", "mean4sd"),
        signed=cfg.get("signed", False),
    )


def _estimate(spike_set, method: str, est_cfg: dict):
    if method == "TSPE":
        result = tspe.tspe(
            spike_set,
            d_max=est_cfg.get("d_max", tspe.DEFAULT_D_MAX),
            a_list=est_cfg.get("a_list", tspe.DEFAULT_A_LIST),
            b_list=est_cfg.get("b_list", tspe.DEFAULT_B_LIST),
            c_list=est_cfg.get("c_list", tspe.DEFAULT_C_LIST),
            flag_norm=est_cfg.get("flag_norm", False),
            bin_size=est_cfg.get("bin_size", 1),
            mean_subtract=est_cfg.get("mean_subtract", False),
        )
        return result.to_connectivity_matrix()
    return estimators.estimate_cm(
        spike_set,
        method,
        bin_size=est_cfg.get("bin_size", 1),
        d_max=est_cfg.get("d_max", estimators.DEFAULT_D_MAX),
        tau=est_cfg.get("tau", estimators.DEFAULT_TAU),
        te_k=est_cfg.get("te_k", 2),
        te_l=est_cfg.get("te_l", 2),
    )


def _detection_rates(tcm, truth_weights):
    off = ~np.eye(truth_weights.shape[0], dtype=bool)
    predicted = tcm.classes[off] != 0
    actual = truth_weights[off] != 0
    tp = int((predicted & actual).sum())
    fp = int((predicted & ~actual).sum())
    pos = int(actual.sum())
    neg = int((~actual).sum())
    return {
        "tpr": tp / pos if pos else None,
        "fpr": fp / neg if neg else None,
        "connections": int(predicted.sum()),
    }


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

VALID_METHODS = estimators.METHODS + ("TSPE",)


def _validate_pipeline_config(cfg: dict) -> None:
    if "topology" not in cfg and "spikes_path" not in cfg:
        raise spikedata.ParameterError(
            "config needs either 'topology' (full run) or 'spikes_path'"
        )
    if "topology" in cfg:
        for key in ("family", "n"):
            if key not in cfg["topology"]:
                raise spikedata.ParameterError(f"topology.{key}: missing")
        sim = cfg.get("simulation", {})
        if sim.get("duration_ms", 60_000) < 1000:
            raise spikedata.ParameterError(
                "simulation.duration_ms must be >= 1000 for evaluation runs"
            )
    for method in cfg.get("estimation", {}).get("methods", ["TSPE"]):
        if method not in VALID_METHODS:
            raise spikedata.ParameterError(f"estimation.methods: unknown {method!r}")
    for path_key in ("spikes_path", "network_path"):
        if path_key in cfg and not Path(cfg[path_key]).exists():
            raise FileNotFoundError(cfg[path_key])


def run_pipeline(cfg: dict, out_dir: Path, master_seed: int) -> dict:
    """Execute the configured stages into ``out_dir``; returns the manifest."""
    _validate_pipeline_config(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = _stage_seeds(master_seed, ["topology", "simulation", "subset", "threshold"])
    manifest = {
        "version": __version__,
        "seed": master_seed,
        "config": cfg,
        "stage_seconds": {},
        "checksums": {},
    }
    stage_times = manifest["stage_seconds"]
    network = None
    spike_set = None
    subset_idx = None

    if "network_path" in cfg:
        network = topology.read_network_json(cfg["network_path"])

    if "topology" in cfg:
        t0 = time.perf_counter()
        topo_cfg = dict(cfg["topology"])
        scale = topo_cfg.pop("scale", None)
        weight_sigma = topo_cfg.pop("weight_sigma", 1.0)
        burst_target = topo_cfg.pop("calibrate_bursts_per_min", None)
        spec = _topology_spec(topo_cfg, seeds["topology"])
        if scale is None:
            if burst_target is None:
                raise spikedata.ParameterError(
                    "topology needs 'scale' or 'calibrate_bursts_per_min'"
                )
            scale, achieved = simulator.calibrate_weight_scale(
                spec, tuple(burst_target), probe_seed=seeds["simulation"],
                weight_sigma=weight_sigma,
            )
            manifest["calibration"] = {"scale": scale, "bursts_per_min": achieved}
        network = topology.build_network(spec, scale, weight_sigma=weight_sigma)
        topology.write_network_json(network, out_dir / "network.json")
        stage_times["generate"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        sim_cfg = cfg.get("simulation", {})
        config = simulator.SimulationConfig(
            duration_ms=sim_cfg.get("duration_ms", 60_000),
            seed=seeds["simulation"],
            noise_rate=sim_cfg.get("noise_rate", 1),
            noise_amplitude=sim_cfg.get("noise_amplitude", 20.0),
            subset_size=sim_cfg.get("subset_size", 100),
            model=sim_cfg.get("model", "izhikevich"),
        )
        full = simulator.simulate(network, config)
        spikedata.write_sdf(full, out_dir / "spikes.sdf.json")
        _, bursts_per_min = simulator.detect_network_bursts(full)
        manifest["bursts_per_min"] = bursts_per_min
        if config.subset_size and config.subset_size < network.n:
            subset_idx = simulator.select_recording_subset(
                network, config.subset_size, np.random.default_rng(seeds["subset"])
            )
            spike_set = simulator.subset_spike_set(full, subset_idx)
            spikedata.write_sdf(spike_set, out_dir / "spikes_subset.sdf.json")
            _json_dump(
                {"channels": [int(i) + 1 for i in subset_idx]},
                out_dir / "subset.json",
            )
        else:
            spike_set = full
        stage_times["simulate"] = time.perf_counter() - t0
    else:
        spike_set = spikedata.read_sdf(cfg["spikes_path"])
        if "subset_path" in cfg:
            subset_idx = np.asarray(
                json.loads(Path(cfg["subset_path"]).read_text())["channels"]
            ) - 1

    est_cfg = cfg.get("estimation", {})
    methods = est_cfg.get("methods", ["TSPE"])
    cms = {}
    t0 = time.perf_counter()
    for method in methods:
        cm = _estimate(spike_set, method, est_cfg)
        cms[method] = cm
        estimators.write_cm(cm, out_dir / f"cm_{method.lower()}.csv")
    stage_times["estimate"] = time.perf_counter() - t0

    tcm = None
    if "threshold" in cfg:
        t0 = time.perf_counter()
        thr_cfg = cfg["threshold"]
        policy = _policy_from_config(thr_cfg)
        target = thr_cfg.get("method", methods[0])
        if target not in cms:
            raise spikedata.ParameterError(f"threshold.method {target!r} not estimated")
        tcm = inference.apply_threshold(
            cms[target], policy, spike_set=spike_set, seed=seeds["threshold"]
        )
        inference.write_tcm(tcm, out_dir / "tcm.csv")
        stage_times["threshold"] = time.perf_counter() - t0

    if cfg.get("evaluation", {}).get("enabled", True) and network is not None:
        t0 = time.perf_counter()
        report = _evaluate(cfg, network, subset_idx, cms, tcm, master_seed)
        _json_dump(report, out_dir / "report.json")
        plots.emit_plots(report, out_dir)
        stage_times["evaluate"] = time.perf_counter() - t0

    for path in sorted(out_dir.iterdir()):
        if path.name != "manifest.json" and path.is_file():
            manifest["checksums"][path.name] = _sha256(path)
    _json_dump(manifest, out_dir / "manifest.json")
    return manifest


def _evaluate(cfg, network, subset_idx, cms, tcm, master_seed) -> dict:
    eval_cfg = cfg.get("evaluation", {})
    target_fpr = eval_cfg.get("target_fpr", 0.01)
    truth = network.subnetwork(subset_idx) if subset_idx is not None else network
    report: dict = {"methods": {}, "target_fpr": target_fpr}
    if subset_idx is not None:
        report["subset_channels"] = [int(i) + 1 for i in subset_idx]
    for method, cm in cms.items():
        roc = analysis.roc_curve(cm, truth.weights)
        entry: dict = {"auc": roc.auc() if not roc.degenerate else None}
        if roc.degenerate:
            entry["degenerate"] = roc.degenerate
        else:
            entry["tpr_at_target_fpr"] = analysis.tpr_at_fpr(roc, target_fpr)
            entry["roc"] = {
                "fpr": [round(float(v), 10) for v in roc.fpr],
                "tpr": [round(float(v), 10) for v in roc.tpr],
            }
        if method == "TSPE" and not roc.degenerate:
            conf = analysis.confusion_from_roc_operating_point(cm, truth.weights, target_fpr)
            entry["confusion_at_target_fpr"] = conf.as_dict()
        report["methods"][method] = entry
    if tcm is not None:
        report["threshold"] = dict(tcm.policy)
        report["threshold"].update(_detection_rates(tcm, truth.weights))
        if eval_cfg.get("graph_metrics", True) and tcm.connection_count:
            gm = analysis.small_world_ness(
                tcm.classes != 0, np.random.default_rng(master_seed + 1)
            )
            report["graph"] = {
                "mpl": gm.mpl,
                "clustering": gm.clustering,
                "mpl_rand": gm.mpl_rand,
                "clustering_rand": gm.clustering_rand,
                "small_world_ness": gm.small_world_ness,
                "reachable_fraction": gm.reachable_fraction,
            }
    stats = topology.degree_statistics(network)
    hist_e = stats.histogram("total", "E")
    hist_i = stats.histogram("total", "I")
    width = max(hist_e.size, hist_i.size)
    hist_e = np.pad(hist_e, (0, width - hist_e.size))
    hist_i = np.pad(hist_i, (0, width - hist_i.size))
    report["degree_histogram"] = [
        [int(d), int(hist_e[d]), int(hist_i[d])]
        for d in range(width)
        if hist_e[d] or hist_i[d]
    ]
    return report


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_generate(args) -> int:
    cfg = {"family": args.family, "n": args.n}
    for key in ("p", "out_degree", "min_degree", "gamma", "m_in", "m_out"):
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    spec = _topology_spec(cfg, args.seed)
    network = topology.build_network(spec, args.scale, weight_sigma=args.weight_sigma)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    topology.write_network_json(network, out / "network.json")
    log.info("wrote %s (%d edges)", out / "network.json", network.edge_count)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    network = topology.read_network_json(args.network)
    config = simulator.SimulationConfig(
        duration_ms=args.duration_ms,
        seed=args.seed,
        noise_rate=args.noise_rate,
        noise_amplitude=args.noise_amplitude,
        subset_size=args.subset,
        model=args.model,
    )
    spikes = simulator.simulate(network, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spikedata.write_sdf(spikes, out / "spikes.sdf.json")
    if args.subset and args.subset < network.n:
        idx = simulator.select_recording_subset(
            network, args.subset, np.random.default_rng(args.seed + 1)
        )
        spikedata.write_sdf(
            simulator.subset_spike_set(spikes, idx), out / "spikes_subset.sdf.json"
        )
        _json_dump({"channels": [int(i) + 1 for i in idx]}, out / "subset.json")
    _, rate = simulator.detect_network_bursts(spikes)
    log.info("simulated %d ms, %.1f bursts/min", args.duration_ms, rate)
    return EXIT_OK


def _cmd_estimate(args) -> int:
    spike_set = spikedata.read_sdf(args.spikes)
    est_cfg = {
        "d_max": args.d_max,
        "tau": args.tau,
        "bin_size": args.bin_size,
        "te_k": args.te_k,
        "te_l": args.te_l,
        "flag_norm": args.flag_norm,
        "mean_subtract": args.mean_subtract,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for method in args.method:
        cm = _estimate(spike_set, method, est_cfg)
        estimators.write_cm(cm, out / f"cm_{method.lower()}.csv")
        log.info("wrote cm_%s.csv", method.lower())
    return EXIT_OK


def _cmd_threshold(args) -> int:
    cm = estimators.read_cm(args.cm)
    policy = inference.ThresholdPolicy(
        kind=args.kind, k=args.k, n=args.n, window=args.window,
        criterion=args.criterion, signed=args.signed,
    )
    spike_set = spikedata.read_sdf(args.spikes) if args.spikes else None
    tcm = inference.apply_threshold(cm, policy, spike_set=spike_set, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inference.write_tcm(tcm, out / "tcm.csv")
    log.info("%d connections pass the threshold", tcm.connection_count)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    network = topology.read_network_json(args.network)
    subset_idx = None
    if args.subset:
        subset_idx = np.asarray(
            json.loads(Path(args.subset).read_text())["channels"]
        ) - 1
    cms = {}
    for path in args.cm:
        cm = estimators.read_cm(path)
        cms[cm.method] = cm
    tcm = inference.read_tcm(args.tcm) if args.tcm else None
    cfg = {"evaluation": {"target_fpr": args.target_fpr}}
    report = _evaluate(cfg, network, subset_idx, cms, tcm, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _json_dump(report, out / "report.json")
    plots.emit_plots(report, out)
    log.info("wrote report.json")
    return EXIT_OK


def _cmd_graph(args) -> int:
    values = np.loadtxt(args.matrix, delimiter=",", ndmin=2)
    gm = analysis.small_world_ness(values != 0, np.random.default_rng(args.seed))
    payload = {
        "mpl": gm.mpl,
        "clustering": gm.clustering,
        "mpl_rand": gm.mpl_rand,
        "clustering_rand": gm.clustering_rand,
        "small_world_ness": gm.small_world_ness,
        "reachable_fraction": gm.reachable_fraction,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _json_dump(payload, out / "graph.json")
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def _cmd_dynamics(args) -> int:
    before = inference.read_tcm(args.before)
    after = inference.read_tcm(args.after)
    report = analysis.classify_effect_changes(
        before, after, strong_quantile=args.strong_quantile, same_tol=args.same_tol
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _json_dump(
        {"groups": report.groups, "strong_threshold": report.strong_threshold},
        out / "dynamics.json",
    )
    print(json.dumps(report.groups, sort_keys=True))
    return EXIT_OK


def _cmd_bench(args) -> int:
    spike_set = spikedata.read_sdf(args.spikes)
    sets = []
    for minutes in args.durations:
        samples = int(minutes * 60 * spike_set.sampling_rate)
        sets.append(spike_set.truncated(min(samples, spike_set.duration_samples)))
    records = analysis.benchmark_estimators(sets, args.methods)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "timing.csv", "w") as fh:
        fh.write("method,channels,duration_s,seconds,pairs_per_second\n")
        for r in records:
            fh.write(
                f"{r.method},{r.channels},{r.duration_s},{r.seconds:.6f},"
                f"{r.pairs_per_second:.3f}\n"
            )
            log.info("%s K=%d %.0fs -> %.2fs", r.method, r.channels,
                     r.duration_s, r.seconds)
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    cfg = json.loads(Path(args.config).read_text())
    out_dir = Path(args.out or cfg.get("out_dir", "run"))
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    run_pipeline(cfg, out_dir, seed)
    log.info("pipeline complete: %s", out_dir)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikeconn",
        description="Spiking-network connectivity estimation toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default 0; pipeline falls back to config)")
    common.add_argument("--threads", type=int, default=0,
                        help="worker threads for pairwise kernels (0 = auto)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--quiet", action="store_true", help="suppress progress logs")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("generate", parents=[common], formatter_class=fmt,
                       help="construct a ground-truth network")
    p.add_argument("--family", required=True, choices=topology.FAMILIES)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--scale", type=float, default=3.0, help="synaptic weight scale")
    p.add_argument("--weight-sigma", type=float, default=1.0,
                   help="log-space spread of excitatory weights")
    p.add_argument("--p", type=float, default=None, help="ER connection probability")
    p.add_argument("--out-degree", type=int, default=None, help="SII out-degree")
    p.add_argument("--min-degree", type=int, default=None, help="IC minimum degree")
    p.add_argument("--gamma", type=float, default=None, help="IC power-law exponent")
    p.add_argument("--m-in", type=int, default=None, help="BA incoming attachments")
    p.add_argument("--m-out", type=int, default=None, help="BA outgoing attachments")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("simulate", parents=[common], formatter_class=fmt,
                       help="simulate a network into spike trains")
    p.add_argument("--network", required=True, help="network.json path")
    p.add_argument("--duration-ms", type=int, default=60_000)
    p.add_argument("--subset", type=int, default=100,
                   help="recorded channel count (0 = record all)")
    p.add_argument("--noise-rate", type=int, default=1,
                   help="noise kicks per 1 ms tick")
    p.add_argument("--noise-amplitude", type=float, default=20.0)
    p.add_argument("--model", choices=("izhikevich", "coba_if"), default="izhikevich")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", parents=[common], formatter_class=fmt,
                       help="estimate connectivity matrices from spike trains")
    p.add_argument("--spikes", required=True, help="SDF-JSON path")
    p.add_argument("--method", nargs="+", default=["TSPE"],
                   choices=sorted(VALID_METHODS))
    p.add_argument("--d-max", type=int, default=25, help="delay sweep bound (bins)")
    p.add_argument("--tau", type=int, default=4, help="coincidence index window")
    p.add_argument("--bin-size", type=int, default=1, help="bin size in samples")
    p.add_argument("--te-k", type=int, default=2, help="TE target history order")
    p.add_argument("--te-l", type=int, default=2, help="TE source history order")
    p.add_argument("--flag-norm", action="store_true",
                   help="TSPE per-delay pair-sum normalization")
    p.add_argument("--mean-subtract", action="store_true",
                   help="exact mean-subtracted correlograms for TSPE")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("threshold", parents=[common], formatter_class=fmt,
                       help="classify a connectivity matrix into a TCM")
    p.add_argument("--cm", required=True, help="cm CSV path")
    p.add_argument("--kind", choices=("easy", "surrogate"), default="easy")
    p.add_argument("--k", type=float, default=4.0, help="easy-threshold SD multiplier")
    p.add_argument("--n", type=int, default=100, help="surrogate iterations")
    p.add_argument("--window", type=int, default=2, help="surrogate jitter window (samples)")
    p.add_argument("--criterion", choices=inference.CRITERIA, default="mean4sd")
    p.add_argument("--signed", action="store_true", help="signed classification")
    p.add_argument("--spikes", default=None, help="SDF path (surrogate thresholds)")
    p.set_defaults(func=_cmd_threshold)

    p = sub.add_parser("evaluate", parents=[common], formatter_class=fmt,
                       help="score matrices and TCMs against ground truth")
    p.add_argument("--network", required=True)
    p.add_argument("--subset", default=None, help="subset.json path")
    p.add_argument("--cm", nargs="+", required=True)
    p.add_argument("--tcm", default=None)
    p.add_argument("--target-fpr", type=float, default=0.01)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("graph", parents=[common], formatter_class=fmt,
                       help="graph metrics of a matrix support")
    p.add_argument("--matrix", required=True, help="CSV matrix path")
    p.set_defaults(func=_cmd_graph)

    p = sub.add_parser("dynamics", parents=[common], formatter_class=fmt,
                       help="effect changes between two TCM snapshots")
    p.add_argument("--before", required=True)
    p.add_argument("--after", required=True)
    p.add_argument("--strong-quantile", type=float, default=0.75)
    p.add_argument("--same-tol", type=float, default=0.05)
    p.set_defaults(func=_cmd_dynamics)

    p = sub.add_parser("bench", parents=[common], formatter_class=fmt,
                       help="wall-clock benchmark of estimators")
    p.add_argument("--spikes", required=True)
    p.add_argument("--methods", nargs="+", default=["NCC", "TSPE", "DTE", "DHOTE"],
                   choices=sorted(VALID_METHODS))
    p.add_argument("--durations", nargs="+", type=float, default=[10.0],
                   help="recording prefixes to time, in minutes")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("pipeline", parents=[common], formatter_class=fmt,
                       help="run configured stages end to end")
    p.add_argument("--config", required=True, help="pipeline JSON config")
    p.set_defaults(func=_cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    if args.threads and args.threads > 0:
        import numba

        numba.set_num_threads(args.threads)
    if args.seed is None and args.command != "pipeline":
        args.seed = 0
    try:
        return args.func(args)
    except (spikedata.ParameterError, spikedata.FormatError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        log.error("missing file: %s", exc)
        return EXIT_IO
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except (simulator.SimulationError, simulator.CalibrationError,
            FloatingPointError) as exc:
        log.error("numerical error: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
