"""Figure rendering for benchmark tables and sensitivity curves.

Figures are written next to the delimited output files; rendering never
changes any numeric artifact.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_sweep(points, param: str, path) -> None:
    """Accuracy curve with a std band over one hyper-parameter grid."""
    values = [p.value for p in points]
    means = [p.mean for p in points]
    stds = [p.std for p in points]
    # keep a zero grid point drawable on a log axis
    positive = [v for v in values if v > 0]
    floor = min(positive) / 10.0 if positive else 1.0
    xs = [v if v > 0 else floor for v in values]

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(xs, means, yerr=stds, marker="o", capsize=3)
    ax.set_xscale("log")
    if 0 in values or 0.0 in values:
        ax.set_xticks(xs)
        ax.set_xticklabels([f"{v:g}" for v in values])
    ax.set_xlabel(param)
    ax.set_ylabel("accuracy")
    ax.set_title(f"sensitivity to {param}")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_bench(results, path) -> None:
    """Grouped bar chart of mean accuracy (std as error bars) per method and task.

    results: {method_name: {task_name: (mean, std)}}.
    """
    methods = list(results)
    tasks = sorted({t for per in results.values() for t in per})
    width = 0.8 / max(len(methods), 1)
    x = np.arange(len(tasks))

    fig, ax = plt.subplots(figsize=(max(6, 1.5 * len(tasks)), 4))
    for i, m in enumerate(methods):
        means = [results[m].get(t, (np.nan, 0.0))[0] for t in tasks]
        stds = [results[m].get(t, (np.nan, 0.0))[1] for t in tasks]
        ax.bar(x + i * width, means, width, yerr=stds, capsize=3, label=m)
    ax.set_xticks(x + width * (len(methods) - 1) / 2)
    ax.set_xticklabels(tasks, rotation=20, ha="right")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0, 1.05)
    ax.legend()
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
