"""Figures for experiment CSVs. The CSV stays the primary output; PNGs are a convenience."""
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "true": dict(color="black", marker="o", linestyle="-"),
    "plugin-wasserstein": dict(color="tab:red", marker="s", linestyle="--"),
    "rmt-wasserstein": dict(color="tab:blue", marker="^", linestyle="-"),
    "proposed-fit": dict(color="tab:blue", marker="^", linestyle="-"),
    "scm": dict(color="tab:red", marker="s", linestyle="--"),
    "shrinkage-init": dict(color="tab:green", marker="d", linestyle=":"),
}


def _series(rows, xfield):
    out = defaultdict(list)
    for r in rows:
        if r.trial == "mean":
            out[r.method].append((getattr(r, xfield), r.value))
    return {k: sorted(v) for k, v in out.items()}


def plot_table1(rows, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for method, pts in _series(rows, "p").items():
        xs, ys = zip(*pts)
        ax.plot(xs, ys, label=method, **_STYLE.get(method, {}))
    ax.set_xscale("log", base=2)
    ax.set_xlabel("p")
    ax.set_ylabel("Wasserstein distance / p")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_figure2(rows, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for method, pts in _series(rows, "n1").items():
        xs, ys = zip(*pts)
        ax.plot(xs, ys, label=method, **_STYLE.get(method, {}))
    ax.set_xlabel("n")
    ax.set_ylabel("Wasserstein distance to C / p")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render(experiment, rows, path):
    """Render the figure for ``experiment``; returns the path, or None when there is no plot."""
    if experiment == "table1":
        return plot_table1(rows, path)
    if experiment == "figure2":
        return plot_figure2(rows, path)
    return None
