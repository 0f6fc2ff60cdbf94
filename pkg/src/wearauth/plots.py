"""SVG charts: FAR/FRR versus confidence threshold, and per-metric box plots."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from wearauth.evaluation import METRIC_NAMES  # noqa: E402

# fixed ids and no date stamp keep repeated runs byte-identical
plt.rcParams["svg.hashsalt"] = "wearauth"
_SVG_META = {"Date": None, "Creator": "wearauth"}


def plot_error_curve(path, curve, eer=None, title="Error rates vs confidence threshold"):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(curve.thresholds, curve.far, label="FAR")
    ax.plot(curve.thresholds, curve.frr, label="FRR")
    if eer is not None:
        ax.axvline(eer.threshold, color="grey", linestyle=":", linewidth=1)
        ax.annotate(f"EER {eer.rate:.3f} @ {eer.threshold:.2f}", (eer.threshold, eer.rate),
                    xytext=(8, 8), textcoords="offset points")
    ax.set_xlabel("confidence threshold")
    ax.set_ylabel("error rate")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_metric_boxes(path, reports, title="Per-fold performance"):
    names = [m for m in METRIC_NAMES if any(getattr(r, m) == getattr(r, m) for r in reports)]
    data = [[getattr(r, m) for r in reports if getattr(r, m) == getattr(r, m)] for m in names]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.boxplot(data)
    ax.set_xticks(range(1, len(names) + 1), names)
    ax.set_ylim(0, 1)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
