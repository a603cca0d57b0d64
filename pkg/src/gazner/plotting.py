"""Report figures written next to the JSON/text outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
    "savefig.bbox": "tight",
}


def _save(fig, path: Path) -> Path:
    # no Software/date metadata so reruns are byte-identical
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_enrichment_histogram(report, path: str | Path) -> Path:
    """Bar chart of documents per enrichment bucket, with the mean marked."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 3.2))
        lows = [lo for lo, _, _ in report.histogram]
        counts = [n for _, _, n in report.histogram]
        ax.bar(lows, counts, width=report.bucket_width, align="edge", color="#4C72B0", edgecolor="white")
        ax.axvline(report.mean, color="#C44E52", linestyle="--", linewidth=1, label=f"mean {report.mean:.2f}%")
        ax.set_xlabel("knowledge graph enrichment (%)")
        ax.set_ylabel("documents")
        ax.legend(frameon=False)
        return _save(fig, Path(path))


def plot_eval_report(report, path: str | Path) -> Path:
    """Grouped precision/recall/F1 bars per label plus micro average."""
    rows = sorted(report.per_label.items()) + [("micro", report.micro)]
    names = [n for n, _ in rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(3.5, 1.3 * len(rows) + 1.5), 3.2))
        width = 0.26
        for k, (metric, color) in enumerate((("precision", "#4C72B0"), ("recall", "#55A868"), ("f1", "#C44E52"))):
            xs = [i + (k - 1) * width for i in range(len(rows))]
            ax.bar(xs, [getattr(s, metric) for _, s in rows], width=width, label=metric, color=color)
        ax.set_xticks(range(len(rows)))
        ax.set_xticklabels(names)
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("score")
        ax.legend(frameon=False, ncol=3, loc="lower center", bbox_to_anchor=(0.5, 1.0))
        return _save(fig, Path(path))


def plot_label_counts(counts: dict[str, int], path: str | Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4, 2.8))
        labels = sorted(counts)
        ax.bar(labels, [counts[k] for k in labels], color="#4C72B0")
        ax.set_ylabel("spans")
        return _save(fig, Path(path))
