"""Matplotlib rendering of strategy-comparison curves."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

# deterministic SVG ids so repeated renders of the same data are identical
matplotlib.rcParams["svg.hashsalt"] = "plotkit"

_LABELS = {
    "joint_entropy": "joint parameter entropy (nats)",
    "rmse": "parameter RMSE",
}


def _axis_label(metric: str) -> str:
    if metric in _LABELS:
        return _LABELS[metric]
    if metric.startswith("std_theta"):
        return f"std of theta_{metric.removeprefix('std_theta')}"
    return metric


def render_comparison(series, metric, out_path):
    """Plot every strategy's curve for one metric and write a vector file.

    One line per strategy, shaded band of +- one standard error, stage on
    the x-axis.  Returns the matplotlib figure (also saved to ``out_path``).
    """
    chosen = sorted((s for s in series if s.metric == metric), key=lambda s: s.strategy)
    if not chosen:
        available = sorted({s.metric for s in series})
        raise ValueError(f"no series for metric {metric!r}; available: {available}")

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for s in chosen:
        (line,) = ax.plot(s.stages, s.values, marker="o", markersize=3.5, label=s.strategy)
        ax.fill_between(s.stages, s.values - s.stderrs, s.values + s.stderrs,
                        alpha=0.18, color=line.get_color(), linewidth=0)
    ax.set_xlabel("stage")
    ax.set_ylabel(_axis_label(metric))
    ax.set_xticks(chosen[0].stages)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    # strip the timestamp so re-renders of the same data are byte-identical
    suffix = str(out_path).rsplit(".", 1)[-1].lower()
    metadata = {"svg": {"Date": None}, "pdf": {"CreationDate": None}}.get(suffix)
    fig.savefig(out_path, metadata=metadata)
    plt.close(fig)
    return fig
