"""Static SVG/CSV renderings of evaluation reports.

Plotting is best-effort: every writer catches its own failures and logs
them, so a broken plotting backend can never fail an analysis run.  Each
SVG has a CSV twin with the plotted points.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "spikeconn"  # deterministic SVG ids
import matplotlib.pyplot as plt  # noqa: E402

log = logging.getLogger("spikeconn")

_SVG_META = {"Date": None}  # omit timestamps so re-runs are byte-identical

__all__ = ["emit_plots"]


def _write_roc(report: dict, out_dir: Path) -> None:
    methods = report.get("methods") or {}
    series = {
        name: data["roc"] for name, data in methods.items() if data.get("roc")
    }
    if not series:
        log.info("no ROC data in report; skipping roc plot")
        return
    with open(out_dir / "roc.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "fpr", "tpr"])
        for name, roc in series.items():
            for f, t in zip(roc["fpr"], roc["tpr"]):
                writer.writerow([name, f, t])
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, roc in series.items():
        ax.plot(roc["fpr"], roc["tpr"], label=name)
    ax.plot([0, 1], [0, 1], ls="--", c="grey", lw=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_dir / "roc.svg", metadata=_SVG_META)
    plt.close(fig)


def _write_tpr_vs_duration(report: dict, out_dir: Path) -> None:
    sweep = report.get("duration_sweep")
    if not sweep:
        log.info("no duration sweep in report; skipping tpr_vs_duration plot")
        return
    with open(out_dir / "tpr_vs_duration.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "duration_min", "tpr_at_1pct_fpr"])
        for name, points in sweep.items():
            for minutes, tpr in points:
                writer.writerow([name, minutes, tpr])
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, points in sweep.items():
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.plot(xs, ys, marker="o", label=name)
    ax.set_xlabel("recording duration [min]")
    ax.set_ylabel("TPR at 1% FPR")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_dir / "tpr_vs_duration.svg", metadata=_SVG_META)
    plt.close(fig)


def _write_degree_hist(report: dict, out_dir: Path) -> None:
    hist = report.get("degree_histogram")
    if not hist:
        log.info("no degree data in report; skipping degree_hist plot")
        return
    with open(out_dir / "degree_hist.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["degree", "count_excitatory", "count_inhibitory"])
        for row in hist:
            writer.writerow(row)
    fig, ax = plt.subplots(figsize=(5, 4))
    degrees = [r[0] for r in hist]
    ax.bar(degrees, [r[1] for r in hist], label="excitatory", alpha=0.7)
    ax.bar(degrees, [r[2] for r in hist],
           bottom=[r[1] for r in hist], label="inhibitory", alpha=0.7)
    ax.set_xlabel("total degree")
    ax.set_ylabel("neurons")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_dir / "degree_hist.svg", metadata=_SVG_META)
    plt.close(fig)


def emit_plots(report: dict, out_dir) -> list[str]:
    """Render the report sections that are present; returns written names."""
    out_dir = Path(out_dir)
    written = []
    for writer in (_write_roc, _write_tpr_vs_duration, _write_degree_hist):
        try:
            before = set(p.name for p in out_dir.iterdir())
            writer(report, out_dir)
            written += sorted(set(p.name for p in out_dir.iterdir()) - before)
        except Exception as exc:  # plotting must never break analysis
            log.warning("plot writer %s failed: %s", writer.__name__, exc)
    return written
